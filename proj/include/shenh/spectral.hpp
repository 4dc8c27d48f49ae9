#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "shenh/signal.hpp"

namespace shenh {

/// Frame layout of the analysis/synthesis pair. Defaults: 32 ms frames, 16 ms
/// hop, 512-point transform at 16 kHz.
struct StftConfig {
  std::size_t frame_len = 512;
  std::size_t hop = 256;
  std::size_t fft_size = 512;
  double sample_rate = 16000.0;

  std::size_t bins() const { return fft_size / 2 + 1; }
  /// Number of full frames in a signal of `samples` samples.
  std::size_t frames_for(std::size_t samples) const;
  /// Length of the overlap-add output for `frames` frames.
  std::size_t samples_for(std::size_t frames) const;
  void validate() const;
};

/// Periodic square-root Hann window |sin(pi n / L)|, n = 0..L-1.
std::vector<double> sqrt_hann(std::size_t length);

/// Complex T x F x C tensor; channel index fastest.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t frames, std::size_t bins, std::size_t channels);

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t channels() const { return channels_; }

  std::complex<double>& at(std::size_t t, std::size_t f, std::size_t c) {
    return data_[(t * bins_ + f) * channels_ + c];
  }
  const std::complex<double>& at(std::size_t t, std::size_t f, std::size_t c) const {
    return data_[(t * bins_ + f) * channels_ + c];
  }

  std::span<std::complex<double>> data() { return data_; }
  std::span<const std::complex<double>> data() const { return data_; }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::complex<double>> data_;
};

Spectrogram stft(const MultichannelSignal& signal, const StftConfig& config);

/// Weighted overlap-add with the synthesis square-root Hann window. Samples
/// covered by two frames are reconstructed exactly; the first and last hop are
/// tapered by the window.
MultichannelSignal istft(const Spectrogram& spec, const StftConfig& config);

/// Adjoint of istft with respect to the real and imaginary parts of each bin:
/// given dL/dy for the istft output, returns dL/dRe + j dL/dIm per bin.
Spectrogram istft_adjoint(const MultichannelSignal& grad_out, std::size_t frames,
                          const StftConfig& config);

/// Half-open sample range [begin, end) where istft(stft(x)) == x.
struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
};
SampleRange interior_range(std::size_t frames, const StftConfig& config);

}  // namespace shenh
