#pragma once

#include <cstddef>
#include <string>

#include "shenh/features.hpp"

namespace shenh::nn {

enum class Direction { unidirectional, bidirectional };

std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

/// Layer plan of the inplace gated convolutional recurrent enhancer.
///
/// Parallel variant: one encoder on the STFT channels and one on the SHT
/// channels, `glu_channels` wide each; their outputs are concatenated. Serial
/// variant: a single encoder on [STFT | SHT]. The recurrent core runs an LSTM
/// per frequency bin over time and projects to `decoder_channels`; the decoder
/// mirrors the encoder with transposed inplace GLUs, taking encoder outputs as
/// skip inputs, and a 1x1 head emits (re, im) of the reference-channel STFT.
struct EnhancerConfig {
  Variant variant = Variant::parallel;
  std::size_t stft_channels = 18;
  std::size_t sht_channels = 50;
  std::size_t encoder_blocks = 6;
  std::size_t glu_channels = 32;
  std::size_t decoder_blocks = 6;
  std::size_t decoder_channels = 128;
  std::size_t kernel_freq = 5;
  std::size_t kernel_time = 1;
  std::size_t recurrent_hidden = 64;
  std::size_t bins = 257;
  Direction direction = Direction::unidirectional;
  bool skip_connections = true;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;

  /// Full-size layout: 32 channels per encoder (parallel) or 64 (serial).
  static EnhancerConfig full_size(Variant variant);

  /// Channels leaving the encoder stage.
  std::size_t encoder_width() const;
  std::size_t recurrent_width() const;
  /// Input width of decoder block j (0-based).
  std::size_t decoder_input_width(std::size_t j) const;
  /// No blocks and no recurrent core.
  bool is_empty() const;
  void validate() const;
};

struct ModelCost {
  std::size_t params = 0;
  double macs_per_bin_frame = 0.0;
  /// 2 x multiply-accumulates over all bins and the frames in one second.
  double flops_per_second = 0.0;
};

/// Analytic parameter and FLOP count. `frames_per_second` defaults to a
/// 16 ms hop.
ModelCost count_params_flops(const EnhancerConfig& config, double frames_per_second = 62.5);

}  // namespace shenh::nn
