#include "shenh/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "shenh/kernels.hpp"

namespace shenh {

std::vector<Vec3> RoomConfig::mic_positions() const {
  std::vector<Vec3> out;
  for (const auto& p : array.cartesian()) {
    out.push_back({array_center[0] + p[0], array_center[1] + p[1], array_center[2] + p[2]});
  }
  return out;
}

namespace {

bool strictly_inside(const Vec3& p, const Vec3& dims) {
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] > 0.0 && p[a] < dims[a])) return false;
  }
  return true;
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

void RoomConfig::validate() const {
  for (double d : dimensions) {
    if (!(d > 0.0)) throw std::invalid_argument("room dimensions must be positive");
  }
  if (!(rt60 >= 0.0)) throw std::invalid_argument("rt60 must be non-negative");
  if (!(sample_rate > 0.0) || !(sound_speed > 0.0)) {
    throw std::invalid_argument("sample rate and sound speed must be positive");
  }
  if (!strictly_inside(source_pos, dimensions)) throw std::invalid_argument("source outside room");
  for (const auto& m : mic_positions()) {
    if (!strictly_inside(m, dimensions)) throw std::invalid_argument("microphone outside room");
  }
}

namespace {

double sabine_floor(const Vec3& dims, double sound_speed) {
  const double volume = dims[0] * dims[1] * dims[2];
  const double surface = 2.0 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2]);
  return 24.0 * std::log(10.0) * volume / (sound_speed * surface);
}

}  // namespace

double sabine_reflection(const Vec3& dims, double rt60, double sound_speed) {
  if (!(rt60 >= 0.0)) throw std::invalid_argument("rt60 must be non-negative");
  if (rt60 == 0.0) return 0.0;
  const double volume = dims[0] * dims[1] * dims[2];
  const double surface = 2.0 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2]);
  const double alpha = 24.0 * std::log(10.0) * volume / (sound_speed * surface * rt60);
  if (alpha > 1.0) {
    throw std::invalid_argument("rt60 " + std::to_string(rt60) +
                                " s is below the shortest reverberation this room supports");
  }
  return std::sqrt(1.0 - alpha);
}

std::size_t effective_length(const RoomConfig& config) {
  if (config.length > 0) return config.length;
  double longest = 0.0;
  for (const auto& m : config.mic_positions()) {
    longest = std::max(longest, distance(m, config.source_pos));
  }
  const auto direct = static_cast<std::size_t>(
      std::ceil(longest / config.sound_speed * config.sample_rate)) + 1;
  const auto decay = static_cast<std::size_t>(std::ceil(config.rt60 * config.sample_rate));
  return std::max(direct, decay);
}

namespace {

int order_for(double beta) {
  if (beta <= 0.0) return 0;
  // Amplitude factor 1e-3 (-60 dB) relative to the direct path.
  return static_cast<int>(std::ceil(std::log(1e-3) / std::log(beta)));
}

MultichannelSignal render_images(const RoomConfig& config, double beta, int max_order,
                                 std::size_t length, const std::vector<Vec3>& mics) {
  const double fs = config.sample_rate;
  const double c = config.sound_speed;
  const Vec3& L = config.dimensions;
  const Vec3& s = config.source_pos;

  // Images beyond the response length cannot contribute.
  const double reach = static_cast<double>(length) * c / fs;
  int span[3];
  for (int a = 0; a < 3; ++a) span[a] = static_cast<int>(std::ceil(reach / (2.0 * L[a]))) + 1;

  std::vector<double> beta_pow(static_cast<std::size_t>(4 * (span[0] + span[1] + span[2]) + 8));
  for (std::size_t k = 0; k < beta_pow.size(); ++k) beta_pow[k] = std::pow(beta, double(k));

  MultichannelSignal out(mics.size(), length, fs);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(mics.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t mi = 0; mi < count; ++mi) {
    const Vec3& r = mics[static_cast<std::size_t>(mi)];
    auto h = out.channel(static_cast<std::size_t>(mi));
    for (int mx = -span[0]; mx <= span[0]; ++mx) {
      for (int q = 0; q <= 1; ++q) {
        const double dx = (1 - 2 * q) * s[0] + 2.0 * mx * L[0] - r[0];
        const int nx = std::abs(mx - q) + std::abs(mx);
        if (nx > max_order) continue;
        for (int my = -span[1]; my <= span[1]; ++my) {
          for (int j = 0; j <= 1; ++j) {
            const double dy = (1 - 2 * j) * s[1] + 2.0 * my * L[1] - r[1];
            const int ny = nx + std::abs(my - j) + std::abs(my);
            if (ny > max_order) continue;
            for (int mz = -span[2]; mz <= span[2]; ++mz) {
              for (int k = 0; k <= 1; ++k) {
                const double dz = (1 - 2 * k) * s[2] + 2.0 * mz * L[2] - r[2];
                const int order = ny + std::abs(mz - k) + std::abs(mz);
                if (order > max_order) continue;
                const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
                const auto idx = static_cast<std::size_t>(std::llround(d / c * fs));
                if (idx >= length) continue;
                const double gain = beta_pow[static_cast<std::size_t>(order)];
                if (gain == 0.0) continue;
                h[idx] += gain / (4.0 * kPi * d);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

int effective_max_order(const RoomConfig& config) {
  if (config.max_order >= 0) return config.max_order;
  return order_for(wall_reflection(config));
}

double wall_reflection(const RoomConfig& config) {
  config.validate();
  const double target = config.rt60;
  if (target == 0.0) return 0.0;
  // Shortest reverberation time Sabine can express in this room (absorption 1).
  const double floor = sabine_floor(config.dimensions, config.sound_speed) * 1.0001;
  const std::size_t length = effective_length(config);
  const std::vector<Vec3> first{config.mic_positions().front()};
  const auto measure = [&](double param) {
    const double beta = sabine_reflection(config.dimensions, param, config.sound_speed);
    const int order = config.max_order >= 0 ? config.max_order : order_for(beta);
    return estimate_t60(render_images(config, beta, order, length, first).channel(0),
                        config.sample_rate);
  };

  // Search over the Sabine time: grow or shrink until the target is
  // bracketed, then bisect in log space.
  double param = target;
  double best = param;
  double best_error = std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = 0.0;  // Sabine times measuring below / above the target
  for (int iter = 0; iter < 24; ++iter) {
    const double measured = measure(param);
    const double error = std::abs(measured / target - 1.0);
    if (error < best_error) {
      best_error = error;
      best = param;
    }
    if (error < 0.01) break;
    (measured < target ? lo : hi) = param;
    if (lo > 0.0 && hi > 0.0) {
      param = std::sqrt(lo * hi);
    } else if (hi > 0.0) {
      if (param <= floor) break;
      param = std::max(param * 0.8, floor);
    } else {
      param *= 1.25;
    }
  }
  return sabine_reflection(config.dimensions, best, config.sound_speed);
}

MultichannelSignal simulate_rir(const RoomConfig& config) {
  const double beta = wall_reflection(config);
  const int max_order = config.max_order >= 0 ? config.max_order : order_for(beta);
  return render_images(config, beta, max_order, effective_length(config), config.mic_positions());
}

std::vector<double> schroeder_curve(std::span<const double> rir) {
  std::vector<double> edc(rir.size());
  double acc = 0.0;
  for (std::size_t i = rir.size(); i-- > 0;) {
    acc += rir[i] * rir[i];
    edc[i] = acc;
  }
  if (acc <= 0.0) throw std::invalid_argument("silent impulse response");
  const double total = edc.empty() ? 1.0 : edc[0];
  for (auto& e : edc) e = e > 0.0 ? 10.0 * std::log10(e / total) : -std::numeric_limits<double>::infinity();
  return edc;
}

double estimate_t60(std::span<const double> rir, double sample_rate) {
  const auto edc = schroeder_curve(rir);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] > -5.0) continue;
    if (edc[i] < -25.0) break;
    const double t = static_cast<double>(i) / sample_rate;
    sx += t;
    sy += edc[i];
    sxx += t * t;
    sxy += t * edc[i];
    ++n;
  }
  if (n < 2) throw std::runtime_error("impulse response too short to fit a decay");
  const double slope = (static_cast<double>(n) * sxy - sx * sy) /
                       (static_cast<double>(n) * sxx - sx * sx);
  if (!(slope < 0.0)) throw std::runtime_error("energy decay is not decreasing");
  return -60.0 / slope;
}

std::vector<cplx> synthesize_plane_waves(std::span<const PlaneWaveSource> sources,
                                         double wavenumber, const ArrayGeometry& geometry,
                                         std::span<const cplx> noise) {
  if (!noise.empty() && noise.size() != geometry.count()) {
    throw std::invalid_argument("noise length does not match microphone count");
  }
  std::vector<cplx> p(geometry.count());
  if (!noise.empty()) std::copy(noise.begin(), noise.end(), p.begin());
  for (const auto& src : sources) {
    if (!std::isfinite(src.amplitude.real()) || !std::isfinite(src.amplitude.imag())) {
      throw std::invalid_argument("plane-wave amplitude must be finite");
    }
    const auto v = steering_vector(wavenumber, src.direction, geometry);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += v[i] * src.amplitude;
  }
  return p;
}

MultichannelSignal apply_rir(const MultichannelSignal& dry, const MultichannelSignal& rirs) {
  if (dry.channels() != 1) throw std::invalid_argument("apply_rir expects a mono dry signal");
  if (dry.sample_rate() != rirs.sample_rate()) {
    throw std::invalid_argument("sample-rate mismatch between signal and impulse responses");
  }
  if (dry.samples() == 0 || rirs.samples() == 0) {
    throw std::invalid_argument("apply_rir on an empty signal");
  }
  std::vector<std::span<const double>> filters;
  for (std::size_t c = 0; c < rirs.channels(); ++c) filters.push_back(rirs.channel(c));
  const auto wet = kernels::fir_convolve(dry.channel(0), filters);
  MultichannelSignal out(rirs.channels(), dry.samples() + rirs.samples() - 1, dry.sample_rate());
  for (std::size_t c = 0; c < rirs.channels(); ++c) {
    std::copy(wet[c].begin(), wet[c].end(), out.channel(c).begin());
  }
  return out;
}

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

MultichannelSignal loop_to_length(const MultichannelSignal& x, std::size_t samples) {
  if (x.samples() == 0) throw std::invalid_argument("cannot loop an empty signal");
  MultichannelSignal out(x.channels(), samples, x.sample_rate());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto src = x.channel(c);
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < samples; ++i) dst[i] = src[i % src.size()];
  }
  return out;
}

MixResult mix_at_snr(const MultichannelSignal& clean, const MultichannelSignal& noise,
                     double snr_db, std::size_t ref_channel) {
  if (clean.channels() != noise.channels()) {
    throw std::invalid_argument("clean and noise channel counts differ");
  }
  if (ref_channel >= clean.channels()) throw std::invalid_argument("reference channel out of range");
  const MultichannelSignal fitted =
      noise.samples() == clean.samples() ? noise : loop_to_length(noise, clean.samples());
  const double pc = mean_power(clean.channel(ref_channel));
  const double pn = mean_power(fitted.channel(ref_channel));
  if (!(pc > 0.0)) throw std::invalid_argument("clean reference channel has zero power");
  if (!(pn > 0.0)) throw std::invalid_argument("noise reference channel has zero power");

  const double scale = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
  MixResult result{MultichannelSignal(clean.channels(), clean.samples(), clean.sample_rate()),
                   scale};
  auto out = result.mixture.data();
  const auto c = clean.data();
  const auto n = fitted.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c[i] + scale * n[i];
  return result;
}

}  // namespace shenh
