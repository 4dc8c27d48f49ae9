#include "shenh/spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shenh/fft.hpp"

namespace shenh {

namespace {

constexpr double kPiLocal = 3.14159265358979323846;

// Sum of squared windows over overlapping frames; constant for L/hop integer.
double cola_gain(const std::vector<double>& w, std::size_t hop) {
  double g = 0.0;
  const std::size_t probe = hop / 2;
  for (std::size_t n = probe; n < w.size(); n += hop) g += w[n] * w[n];
  return g;
}

}  // namespace

std::size_t StftConfig::frames_for(std::size_t samples) const {
  if (samples < frame_len) return 0;
  return 1 + (samples - frame_len) / hop;
}

std::size_t StftConfig::samples_for(std::size_t frames) const {
  if (frames == 0) return 0;
  return (frames - 1) * hop + frame_len;
}

void StftConfig::validate() const {
  if (frame_len < 2 || frame_len % 2 != 0) throw std::invalid_argument("frame_len must be even");
  if (hop == 0 || frame_len % hop != 0 || hop > frame_len / 2) {
    throw std::invalid_argument("hop must divide frame_len and be at most frame_len / 2");
  }
  if (fft_size < frame_len || fft_size % 2 != 0) {
    throw std::invalid_argument("fft_size must be even and >= frame_len");
  }
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be positive");
}

std::vector<double> sqrt_hann(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = std::abs(std::sin(kPiLocal * static_cast<double>(n) / static_cast<double>(length)));
  }
  return w;
}

Spectrogram::Spectrogram(std::size_t frames, std::size_t bins, std::size_t channels)
    : frames_(frames), bins_(bins), channels_(channels), data_(frames * bins * channels) {}

Spectrogram stft(const MultichannelSignal& signal, const StftConfig& config) {
  config.validate();
  if (signal.samples() < config.frame_len) {
    throw std::invalid_argument("signal shorter than one frame (" +
                                std::to_string(signal.samples()) + " < " +
                                std::to_string(config.frame_len) + ")");
  }
  const std::size_t frames = config.frames_for(signal.samples());
  const std::size_t bins = config.bins();
  const std::size_t channels = signal.channels();
  const auto window = sqrt_hann(config.frame_len);
  const RealFft fft(config.fft_size);
  Spectrogram spec(frames, bins, channels);

#pragma omp parallel
  {
    std::vector<double> buf(config.fft_size, 0.0);
    std::vector<std::complex<double>> out(bins);
#pragma omp for collapse(2) schedule(static)
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < frames; ++t) {
        const auto x = signal.channel(c);
        for (std::size_t n = 0; n < config.frame_len; ++n) {
          buf[n] = x[t * config.hop + n] * window[n];
        }
        fft.forward(buf, out);
        for (std::size_t f = 0; f < bins; ++f) spec.at(t, f, c) = out[f];
      }
    }
  }
  return spec;
}

MultichannelSignal istft(const Spectrogram& spec, const StftConfig& config) {
  config.validate();
  if (spec.bins() != config.bins()) {
    throw std::invalid_argument("spectrogram has " + std::to_string(spec.bins()) +
                                " bins, expected " + std::to_string(config.bins()));
  }
  const std::size_t frames = spec.frames();
  const std::size_t channels = spec.channels();
  const std::size_t bins = spec.bins();
  const auto window = sqrt_hann(config.frame_len);
  const double gain = cola_gain(window, config.hop);
  const double scale = 1.0 / (static_cast<double>(config.fft_size) * gain);
  const RealFft fft(config.fft_size);
  MultichannelSignal out(channels, config.samples_for(frames), config.sample_rate);

#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<std::complex<double>> in(bins);
    std::vector<double> buf(config.fft_size);
    auto y = out.channel(c);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t f = 0; f < bins; ++f) in[f] = spec.at(t, f, c);
      fft.inverse(in, buf);
      for (std::size_t n = 0; n < config.frame_len; ++n) {
        y[t * config.hop + n] += buf[n] * window[n] * scale;
      }
    }
  }
  return out;
}

Spectrogram istft_adjoint(const MultichannelSignal& grad_out, std::size_t frames,
                          const StftConfig& config) {
  config.validate();
  if (grad_out.samples() < config.samples_for(frames)) {
    throw std::invalid_argument("istft_adjoint: gradient shorter than the overlap-add output");
  }
  const std::size_t bins = config.bins();
  const std::size_t channels = grad_out.channels();
  const auto window = sqrt_hann(config.frame_len);
  const double gain = cola_gain(window, config.hop);
  const double scale = 1.0 / (static_cast<double>(config.fft_size) * gain);
  const RealFft fft(config.fft_size);
  Spectrogram spec(frames, bins, channels);

  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<double> buf(config.fft_size, 0.0);
    std::vector<std::complex<double>> out(bins);
    const auto g = grad_out.channel(c);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t n = 0; n < config.frame_len; ++n) {
        buf[n] = g[t * config.hop + n] * window[n] * scale;
      }
      fft.forward(buf, out);
      for (std::size_t f = 0; f < bins; ++f) {
        // Interior bins appear twice in the Hermitian spectrum.
        const double weight = (f == 0 || f + 1 == bins) ? 1.0 : 2.0;
        spec.at(t, f, c) = weight * out[f];
      }
    }
  }
  return spec;
}

SampleRange interior_range(std::size_t frames, const StftConfig& config) {
  if (frames == 0) return {};
  const std::size_t begin = config.frame_len - config.hop;
  const std::size_t end = (frames - 1) * config.hop + config.hop;
  return {begin, end};
}

}  // namespace shenh
