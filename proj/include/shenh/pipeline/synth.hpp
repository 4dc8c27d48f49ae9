#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shenh::pipeline {

/// Voiced harmonic syllables with formant-shaped spectra and unvoiced
/// fricative bursts, separated by short pauses. RMS of the active part 0.05.
std::vector<double> synth_speech(std::uint64_t seed, double seconds, double sample_rate);

enum class NoiseKind { white, pink, brown, babble, hum };
NoiseKind noise_kind_for(std::size_t index);
std::string to_string(NoiseKind k);

std::vector<double> synth_noise(std::uint64_t seed, double seconds, double sample_rate,
                                NoiseKind kind);

enum class CorpusKind { speech, noise };
CorpusKind parse_corpus_kind(const std::string& s);

/// Writes `count` mono float WAV files named <kind>_NNNN.wav. Item i uses
/// seed ^ i.
std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& dir, CorpusKind kind,
                                                std::size_t count, double seconds,
                                                std::uint64_t seed, double sample_rate = 16000.0);

}  // namespace shenh::pipeline
