#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "shenh/metrics.hpp"
#include "shenh/pipeline/synth.hpp"

using namespace shenh;

namespace {

constexpr double kTwoPi = 6.283185307179586;

std::vector<double> lcg(std::size_t n, std::uint64_t s) {
  std::vector<double> o(n);
  for (auto& v : o) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    v = static_cast<double>(s >> 11) / static_cast<double>(1ULL << 53) - 0.5;
  }
  return o;
}

// Amplitude-modulated harmonic tone plus a little noise, 1.5 s at 16 kHz.
std::vector<double> probe() {
  const std::size_t n = 24000;
  const auto a = lcg(n, 1);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / 16000.0;
    const double env = 0.5 * std::pow(1 + std::sin(kTwoPi * 3.1 * t), 2);
    x[i] = env * (std::sin(kTwoPi * 220 * t) + 0.5 * std::sin(kTwoPi * 660 * t + 0.3) +
                  0.25 * std::sin(kTwoPi * 1800 * t)) +
           0.05 * a[i];
  }
  return x;
}

std::vector<double> add(const std::vector<double>& x, const std::vector<double>& n, double g) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + g * n[i];
  return y;
}

double power(const std::vector<double>& x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0) / x.size();
}

}  // namespace

TEST_CASE("STOI agrees with the reference implementation on fixed vectors") {
  // Values computed with pystoi on the same deterministic signals.
  const auto x = probe();
  const auto n = lcg(x.size(), 2);
  const std::pair<double, double> cases[] = {
      {0.0, 0.9999999999999996},
      {0.3, 0.4683126364151638},
      {1.0, 0.42137868244755033},
      {3.0, 0.3764666876934993},
  };
  for (auto [g, want] : cases) CHECK(std::abs(stoi(x, add(x, n, g)) - want) < 1e-4);
  // Sign flips leave every band envelope unchanged.
  std::vector<double> neg(x);
  for (auto& v : neg) v = -v;
  CHECK(std::abs(stoi(x, neg) - 0.9999999999999996) < 1e-4);
}

TEST_CASE("STOI properties on synthetic speech") {
  const auto s = pipeline::synth_speech(17, 3.0, 16000);
  const auto noise = pipeline::synth_noise(4, 3.0, 16000, pipeline::NoiseKind::babble);
  CHECK(stoi(s, s) >= 0.999);

  const double g0 = std::sqrt(power(s) / power(noise));
  double prev = -1.0;
  for (double snr : {-5.0, 0.0, 5.0}) {
    const double v = stoi(s, add(s, noise, g0 * std::pow(10.0, -snr / 20)));
    CHECK(v > prev);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
  }

  const auto y = add(s, noise, g0);
  std::vector<double> scaled(y);
  for (auto& v : scaled) v *= 7.5;
  CHECK(stoi(s, scaled) == doctest::Approx(stoi(s, y)).epsilon(1e-9));
}

TEST_CASE("STOI input errors") {
  const auto x = probe();
  CHECK_THROWS(stoi(std::vector<double>(x.begin(), x.begin() + 7000), x));
  CHECK_THROWS(stoi(std::vector<double>(x.size(), 0.0), x));
  CHECK_THROWS(stoi(x, x, 8000));
}

TEST_CASE("resampler") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(kTwoPi * 500 * i / 16000.0);
  const auto y = resample_poly(x, 5, 8);
  CHECK(y.size() == 625);
  // A 500 Hz tone survives the 16 -> 10 kHz conversion away from the edges.
  for (std::size_t m = 100; m < 525; ++m) {
    CHECK(y[m] == doctest::Approx(std::sin(kTwoPi * 500 * m / 10000.0)).epsilon(2e-3).scale(1.0));
  }
  CHECK(resample_poly(x, 3, 3) == x);
  CHECK_THROWS(resample_poly(x, 0, 3));
}

TEST_CASE("SI-SDR examples") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> x(4000), n(4000);
  for (auto& v : x) v = nd(rng);
  for (auto& v : n) v = nd(rng);
  // Make n orthogonal to x and give it a tenth of x's energy.
  const double proj = std::inner_product(n.begin(), n.end(), x.begin(), 0.0) /
                      std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
  for (std::size_t i = 0; i < n.size(); ++i) n[i] -= proj * x[i];
  const double g = std::sqrt(power(x) / power(n) / 10.0);
  CHECK(si_sdr(x, add(x, n, g)) == doctest::Approx(10.0).epsilon(1e-9));

  std::vector<double> twice(x);
  for (auto& v : twice) v *= 2.0;
  CHECK(si_sdr(x, twice) == kSiSdrCap);
  CHECK(si_sdr(x, n) <= -20.0);

  const auto y = add(x, n, 0.8);
  const double base = si_sdr(x, y);
  for (double a : {0.01, 0.5, 3.0, 1e4}) {
    std::vector<double> ys(y);
    for (auto& v : ys) v *= a;
    CHECK(std::abs(si_sdr(x, ys) - base) < 1e-10);
  }
  CHECK_THROWS(si_sdr(x, std::vector<double>(10)));
  CHECK_THROWS(si_sdr(std::vector<double>(4000, 0.0), x));
}

TEST_CASE("metric report aggregates") {
  MetricReport r;
  r.add({"a", 0.5, 3.0});
  r.add({"b", 0.75, -1.0});
  r.add({"c", 0.25, 7.0});
  CHECK(r.size() == 3);
  CHECK(std::abs(r.mean_stoi() - 0.5) < 1e-12);
  CHECK(std::abs(r.mean_si_sdr() - 3.0) < 1e-12);
  CHECK_THROWS(MetricReport{}.mean_stoi());
}
