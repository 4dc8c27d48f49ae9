#include "shenh/features.hpp"

#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>

#include "shenh/kernels.hpp"
#include "shenh/log.hpp"

namespace shenh {

ShtFeatures::ShtFeatures(std::size_t frames, std::size_t bins, int order)
    : frames_(frames), bins_(bins), order_(order) {
  if (order < 0) throw std::domain_error("negative truncation order");
  data_.assign(frames * bins * sh_count(order), {});
}

double sht_feature_cutoff_hz(const ArrayGeometry& geometry, int order, double sound_speed) {
  return sht_cutoff_frequency(order, geometry.radius(), sound_speed);
}

namespace {

void warn_cutoff_once(const ArrayGeometry& geometry, int order) {
  static std::mutex mutex;
  static std::set<std::pair<int, double>> reported;
  const double cutoff = sht_feature_cutoff_hz(geometry, order);
  std::lock_guard<std::mutex> lock(mutex);
  if (!reported.insert({order, geometry.radius()}).second) return;
  log_warning("SHT order " + std::to_string(order) + " on a " +
              std::to_string(geometry.radius()) + " m array: kr exceeds the order above " +
              std::to_string(static_cast<long>(std::lround(cutoff))) + " Hz");
}

}  // namespace

ShtFeatures extract_sht_features(const Spectrogram& spec, const ArrayGeometry& geometry,
                                 int order) {
  if (spec.channels() != geometry.count()) {
    throw std::invalid_argument("spectrogram has " + std::to_string(spec.channels()) +
                                " channels for a " + std::to_string(geometry.count()) +
                                "-microphone array");
  }
  warn_cutoff_once(geometry, order);

  const std::size_t mics = geometry.count();
  const std::size_t q = sh_count(order);
  const double scale = 4.0 * kPi / static_cast<double>(mics);
  std::vector<std::complex<double>> basis(q * mics);
  for (std::size_t i = 0; i < mics; ++i) {
    const auto y = sph_harm_all(order, geometry[i].dir);
    for (std::size_t k = 0; k < q; ++k) basis[k * mics + i] = scale * std::conj(y[k]);
  }

  ShtFeatures out(spec.frames(), spec.bins(), order);
  kernels::project_bins(spec.frames() * spec.bins(), mics, q, spec.data(), basis, out.data());
  return out;
}

std::string to_string(Variant v) { return v == Variant::serial ? "serial" : "parallel"; }

Variant parse_variant(const std::string& s) {
  if (s == "serial") return Variant::serial;
  if (s == "parallel") return Variant::parallel;
  throw std::invalid_argument("unknown variant '" + s + "' (expected serial or parallel)");
}

Tensor3<double> split_complex(std::span<const std::complex<double>> data, std::size_t frames,
                              std::size_t bins, std::size_t channels) {
  if (data.size() != frames * bins * channels) throw std::invalid_argument("split_complex: size");
  Tensor3<double> out(frames, bins, 2 * channels);
  auto o = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    o[2 * i] = data[i].real();
    o[2 * i + 1] = data[i].imag();
  }
  return out;
}

std::vector<std::complex<double>> join_complex(const Tensor3<double>& x) {
  if (x.channels() % 2 != 0) throw std::invalid_argument("join_complex: odd channel count");
  std::vector<std::complex<double>> out(x.size() / 2);
  const auto d = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {d[2 * i], d[2 * i + 1]};
  return out;
}

template <class S>
ModelInput<S> make_model_input(Tensor3<S> stft, Tensor3<S> sht, Variant variant) {
  if (stft.frames() == 0) throw std::invalid_argument("empty utterance (zero frames)");
  if (stft.frames() != sht.frames() || stft.bins() != sht.bins()) {
    throw std::invalid_argument("STFT and SHT tensors disagree in frames or bins");
  }
  ModelInput<S> in;
  in.variant = variant;
  if (variant == Variant::serial) {
    in.serial = concat_channels(stft, sht);
  } else {
    in.stft = std::move(stft);
    in.sht = std::move(sht);
  }
  return in;
}

template <class S>
ModelInput<S> pack_model_input(const Spectrogram& spec, const ShtFeatures& feats,
                               Variant variant) {
  if (spec.frames() != feats.frames() || spec.bins() != feats.bins()) {
    throw std::invalid_argument("spectrogram and SHT features disagree in frames or bins");
  }
  if (spec.frames() == 0) throw std::invalid_argument("empty utterance (zero frames)");
  auto stft = split_complex(spec.data(), spec.frames(), spec.bins(), spec.channels());
  auto sht = split_complex(feats.data(), feats.frames(), feats.bins(), feats.coeffs());
  return make_model_input<S>(stft.template cast<S>(), sht.template cast<S>(), variant);
}

template ModelInput<float> make_model_input<float>(Tensor3<float>, Tensor3<float>, Variant);
template ModelInput<double> make_model_input<double>(Tensor3<double>, Tensor3<double>, Variant);
template ModelInput<float> pack_model_input<float>(const Spectrogram&, const ShtFeatures&, Variant);
template ModelInput<double> pack_model_input<double>(const Spectrogram&, const ShtFeatures&,
                                                     Variant);

}  // namespace shenh
