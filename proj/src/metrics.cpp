#include "shenh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "shenh/fft.hpp"

namespace shenh {

namespace {

constexpr double kPiLocal = 3.14159265358979323846;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Analysis constants of the standard STOI definition.
constexpr double kStoiRate = 10000.0;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kHop = kFrame / 2;
constexpr std::size_t kNfft = 512;
constexpr std::size_t kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;

// Hann window of length n + 2 without its zero end points.
std::vector<double> inner_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPiLocal * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
  }
  return w;
}

// Frames starting at 0, hop, ... strictly before len - frame (as the reference
// implementation enumerates them).
std::size_t frame_count(std::size_t len) {
  if (len <= kFrame) return 0;
  return (len - kFrame - 1) / kHop + 1;
}

void remove_silent_frames(const std::vector<double>& x, const std::vector<double>& y,
                          std::vector<double>& xs, std::vector<double>& ys) {
  const auto w = inner_hann(kFrame);
  const std::size_t frames = frame_count(x.size());
  if (frames == 0) throw std::invalid_argument("signal too short for STOI");
  std::vector<double> energy(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    double e = 0.0;
    for (std::size_t n = 0; n < kFrame; ++n) {
      const double v = w[n] * x[t * kHop + n];
      e += v * v;
    }
    energy[t] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  const double top = *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < frames; ++t) {
    if (top - kDynRange - energy[t] < 0.0) keep.push_back(t);
  }
  const std::size_t len = (keep.size() - 1) * kHop + kFrame;
  xs.assign(len, 0.0);
  ys.assign(len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t src = keep[k] * kHop;
    for (std::size_t n = 0; n < kFrame; ++n) {
      xs[k * kHop + n] += w[n] * x[src + n];
      ys[k * kHop + n] += w[n] * y[src + n];
    }
  }
}

// Band index ranges [lo, hi) of the third-octave grouping over rfft bins.
std::vector<std::pair<std::size_t, std::size_t>> third_octave_bands() {
  const std::size_t bins = kNfft / 2 + 1;
  std::vector<double> f(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    f[k] = kStoiRate * static_cast<double>(k) / static_cast<double>(kNfft);
  }
  const auto nearest = [&](double freq) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < bins; ++k) {
      if ((f[k] - freq) * (f[k] - freq) < (f[best] - freq) * (f[best] - freq)) best = k;
    }
    return best;
  };
  std::vector<std::pair<std::size_t, std::size_t>> bands;
  for (std::size_t i = 0; i < kBands; ++i) {
    const double k = static_cast<double>(i);
    const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest(lo), nearest(hi));
  }
  return bands;
}

// kBands x frames band envelopes, frame-major.
std::vector<double> band_envelopes(const std::vector<double>& x, std::size_t& frames_out) {
  const auto w = inner_hann(kFrame);
  const std::size_t frames = frame_count(x.size());
  const auto bands = third_octave_bands();
  const RealFft fft(kNfft);
  std::vector<double> buf(kNfft, 0.0);
  std::vector<std::complex<double>> spec(kNfft / 2 + 1);
  std::vector<double> env(frames * kBands);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n = 0; n < kFrame; ++n) buf[n] = w[n] * x[t * kHop + n];
    fft.forward(buf, spec);
    for (std::size_t b = 0; b < kBands; ++b) {
      double e = 0.0;
      for (std::size_t k = bands[b].first; k < bands[b].second; ++k) e += std::norm(spec[k]);
      env[t * kBands + b] = std::sqrt(e);
    }
  }
  frames_out = frames;
  return env;
}

}  // namespace

std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down) {
  if (up == 0 || down == 0) throw std::invalid_argument("resample factors must be positive");
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};

  // Lowpass at the narrower of the two Nyquist limits, on the upsampled grid.
  const std::size_t ratio = std::max(up, down);
  const std::size_t half = 10 * ratio;
  const double cutoff = 1.0 / static_cast<double>(ratio);
  const double beta = 5.0;
  const double i0b = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(2 * half + 1);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double m = static_cast<double>(i) - static_cast<double>(half);
    const double arg = kPiLocal * cutoff * m;
    const double sinc = m == 0.0 ? 1.0 : std::sin(arg) / arg;
    const double r = m / static_cast<double>(half);
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[i] = cutoff * sinc * win * static_cast<double>(up);
  }

  const std::size_t out_len = (x.size() * up + down - 1) / down;
  std::vector<double> y(out_len, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::size_t m = 0; m < out_len; ++m) {
    // Upsampled-grid position m * down; tap index = pos - j * up + half.
    const auto pos = static_cast<std::ptrdiff_t>(m * down);
    const auto hl = static_cast<std::ptrdiff_t>(half);
    const auto u = static_cast<std::ptrdiff_t>(up);
    std::ptrdiff_t j_lo = (pos - hl + u - 1) / u;
    if (pos - hl < 0) j_lo = 0;
    const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(n - 1, (pos + hl) / u);
    double acc = 0.0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(j_lo, 0); j <= j_hi; ++j) {
      acc += x[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(pos - j * u + hl)];
    }
    y[m] = acc;
  }
  return y;
}

double stoi(std::span<const double> clean, std::span<const double> degraded, double sample_rate) {
  if (sample_rate != 16000.0) throw std::invalid_argument("STOI expects 16 kHz input");
  const std::size_t len = std::min(clean.size(), degraded.size());
  if (len < static_cast<std::size_t>(0.5 * sample_rate)) {
    throw std::invalid_argument("STOI needs at least 0.5 s of audio");
  }
  const bool silent = std::all_of(clean.begin(), clean.begin() + static_cast<std::ptrdiff_t>(len),
                                  [](double v) { return v == 0.0; });
  if (silent) throw std::invalid_argument("STOI reference signal is silent");

  const auto x10 = resample_poly(clean.first(len), 5, 8);
  const auto y10 = resample_poly(degraded.first(len), 5, 8);
  std::vector<double> x;
  std::vector<double> y;
  remove_silent_frames(x10, y10, x, y);

  std::size_t frames = 0;
  const auto xe = band_envelopes(x, frames);
  const auto ye = band_envelopes(y, frames);
  if (frames < kSegment) {
    throw std::invalid_argument("not enough active speech for a STOI segment");
  }

  const double clip = std::pow(10.0, -kBeta / 20.0);
  const std::size_t segments = frames - kSegment + 1;
  double total = 0.0;
  std::vector<double> xs(kSegment);
  std::vector<double> ys(kSegment);
  for (std::size_t m = 0; m < segments; ++m) {
    for (std::size_t b = 0; b < kBands; ++b) {
      double nx = 0.0;
      double ny = 0.0;
      for (std::size_t t = 0; t < kSegment; ++t) {
        xs[t] = xe[(m + t) * kBands + b];
        ys[t] = ye[(m + t) * kBands + b];
        nx += xs[t] * xs[t];
        ny += ys[t] * ys[t];
      }
      const double scale = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0;
      double my = 0.0;
      for (std::size_t t = 0; t < kSegment; ++t) {
        ys[t] = std::min(ys[t] * scale, xs[t] * (1.0 + clip));
        mx += xs[t];
        my += ys[t];
      }
      mx /= static_cast<double>(kSegment);
      my /= static_cast<double>(kSegment);
      double sxx = 0.0;
      double syy = 0.0;
      double sxy = 0.0;
      for (std::size_t t = 0; t < kSegment; ++t) {
        const double a = xs[t] - mx;
        const double c = ys[t] - my;
        sxx += a * a;
        syy += c * c;
        sxy += a * c;
      }
      total += sxy / ((std::sqrt(sxx) + kEps) * (std::sqrt(syy) + kEps));
    }
  }
  const double d = total / static_cast<double>(kBands * segments);
  return std::clamp(d, 0.0, 1.0);
}

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) {
    throw std::invalid_argument("SI-SDR inputs differ in length");
  }
  double rr = 0.0;
  double re = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    rr += reference[i] * reference[i];
    re += reference[i] * estimate[i];
  }
  if (!(rr > 0.0)) throw std::invalid_argument("SI-SDR reference is zero");
  const double alpha = re / rr;
  double target = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = alpha * reference[i];
    const double e = estimate[i] - s;
    target += s * s;
    noise += e * e;
  }
  if (noise <= 0.0) return kSiSdrCap;
  if (target <= 0.0) return -kSiSdrCap;
  return std::clamp(10.0 * std::log10(target / noise), -kSiSdrCap, kSiSdrCap);
}

void MetricReport::add(UtteranceMetrics m) { items_.push_back(std::move(m)); }

double MetricReport::mean_stoi() const {
  if (items_.empty()) throw std::logic_error("empty metric report");
  double s = 0.0;
  for (const auto& m : items_) s += m.stoi;
  return s / static_cast<double>(items_.size());
}

double MetricReport::mean_si_sdr() const {
  if (items_.empty()) throw std::logic_error("empty metric report");
  double s = 0.0;
  for (const auto& m : items_) s += m.si_sdr;
  return s / static_cast<double>(items_.size());
}

}  // namespace shenh
