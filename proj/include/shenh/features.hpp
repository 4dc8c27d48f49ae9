#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shenh/array.hpp"
#include "shenh/spectral.hpp"
#include "shenh/tensor.hpp"

namespace shenh {

/// Spherical-harmonic coefficients for every T-F bin, (order+1)^2 per bin.
class ShtFeatures {
 public:
  ShtFeatures(std::size_t frames, std::size_t bins, int order);

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  int order() const { return order_; }
  std::size_t coeffs() const { return sh_count(order_); }

  std::complex<double>& at(std::size_t t, std::size_t f, std::size_t q) {
    return data_[(t * bins_ + f) * coeffs() + q];
  }
  const std::complex<double>& at(std::size_t t, std::size_t f, std::size_t q) const {
    return data_[(t * bins_ + f) * coeffs() + q];
  }
  std::span<std::complex<double>> data() { return data_; }
  std::span<const std::complex<double>> data() const { return data_; }

 private:
  std::size_t frames_;
  std::size_t bins_;
  int order_;
  std::vector<std::complex<double>> data_;
};

/// Applies the discrete SHT over the microphone axis of every bin.
ShtFeatures extract_sht_features(const Spectrogram& spec, const ArrayGeometry& geometry, int order);

/// Bins above this frequency have kr above the truncation order.
double sht_feature_cutoff_hz(const ArrayGeometry& geometry, int order, double sound_speed = 343.0);

enum class Variant { serial, parallel };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Real network input. Complex values are split into interleaved (re, im)
/// channel pairs. `serial` holds [stft | sht] for the serial variant; the
/// parallel variant fills `stft` and `sht` instead.
template <class S>
struct ModelInput {
  Variant variant = Variant::parallel;
  Tensor3<S> stft;
  Tensor3<S> sht;
  Tensor3<S> serial;

  std::size_t frames() const {
    return variant == Variant::serial ? serial.frames() : stft.frames();
  }
  std::size_t bins() const { return variant == Variant::serial ? serial.bins() : stft.bins(); }

  template <class U>
  ModelInput<U> cast() const {
    return {variant, stft.template cast<U>(), sht.template cast<U>(), serial.template cast<U>()};
  }
};

/// Complex T x F x C -> real T x F x 2C.
Tensor3<double> split_complex(std::span<const std::complex<double>> data, std::size_t frames,
                              std::size_t bins, std::size_t channels);
/// Inverse of split_complex.
std::vector<std::complex<double>> join_complex(const Tensor3<double>& x);

template <class S>
ModelInput<S> pack_model_input(const Spectrogram& spec, const ShtFeatures& feats, Variant variant);

/// Build from already split real tensors (as stored on disk).
template <class S>
ModelInput<S> make_model_input(Tensor3<S> stft, Tensor3<S> sht, Variant variant);

}  // namespace shenh
