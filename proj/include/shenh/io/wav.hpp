#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "shenh/signal.hpp"

namespace shenh::io {

enum class WavFormat { pcm16, float32 };

/// Reads PCM-16 or IEEE float-32 WAV (plain or extensible header). When
/// `expected_rate` is nonzero a different sample rate is an error.
MultichannelSignal read_wav(const std::filesystem::path& path, double expected_rate = 16000.0);
MultichannelSignal decode_wav(std::string_view bytes, const std::string& what = "wav",
                              double expected_rate = 16000.0);

/// PCM-16 uses a 32768 scale and saturates outside [-1, 1).
std::string encode_wav(const MultichannelSignal& signal, WavFormat format);
void write_wav(const std::filesystem::path& path, const MultichannelSignal& signal,
               WavFormat format = WavFormat::float32);

}  // namespace shenh::io
