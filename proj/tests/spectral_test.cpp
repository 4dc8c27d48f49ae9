#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "shenh/spectral.hpp"
#include "shenh/spherical.hpp"

using namespace shenh;

namespace {

MultichannelSignal random_signal(std::size_t channels, std::size_t samples, std::uint64_t seed) {
  MultichannelSignal x(channels, samples, 16000);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (auto& v : x.data()) v = nd(rng);
  return x;
}

}  // namespace

TEST_CASE("frame counting") {
  const StftConfig c;
  CHECK(c.bins() == 257);
  CHECK(c.frames_for(512) == 1);
  CHECK(c.frames_for(767) == 1);
  CHECK(c.frames_for(768) == 2);
  const auto s = stft(random_signal(2, 16000, 1), c);
  CHECK(s.frames() == 1 + (16000 - 512) / 256);
  CHECK(s.bins() == 257);
  CHECK(s.channels() == 2);
  CHECK_THROWS(stft(random_signal(1, 511, 1), c));
}

TEST_CASE("window satisfies the overlap-add identity") {
  const auto w = sqrt_hann(512);
  for (std::size_t n = 0; n < 256; ++n) {
    CHECK(std::abs(w[n] * w[n] + w[n + 256] * w[n + 256] - 1.0) < 1e-12);
  }
}

TEST_CASE("zero in, zero out") {
  const StftConfig c;
  MultichannelSignal z(1, 4000, 16000);
  const auto sz = stft(z, c);
  for (const auto& v : sz.data()) CHECK(v == std::complex<double>(0.0, 0.0));
  Spectrogram zs(10, 257, 1);
  const auto iz = istft(zs, c);
  for (double v : iz.data()) CHECK(v == 0.0);
}

TEST_CASE("bin-centered tone concentrates in its bin") {
  const StftConfig c;
  const std::size_t k = 40;
  MultichannelSignal x(1, 4096, 16000);
  for (std::size_t n = 0; n < x.samples(); ++n) x.at(0, n) = std::cos(2 * kPi * k * n / 512.0);
  const auto s = stft(x, c);
  for (std::size_t t = 0; t < s.frames(); ++t) {
    double total = 0.0, near = 0.0;
    for (std::size_t f = 0; f < s.bins(); ++f) {
      const double e = std::norm(s.at(t, f, 0));
      total += e;
      if (f + 1 >= k && f <= k + 1) near += e;
    }
    CHECK(near / total >= 0.99);
  }
}

TEST_CASE("frames match a direct DFT of the windowed samples") {
  const StftConfig c;
  const auto x = random_signal(2, 1400, 9);
  const auto s = stft(x, c);
  const auto w = sqrt_hann(c.frame_len);
  for (std::size_t ch = 0; ch < 2; ++ch) {
    for (std::size_t t = 0; t < s.frames(); ++t) {
      for (std::size_t f : {0ul, 1ul, 17ul, 128ul, 255ul, 256ul}) {
        std::complex<double> want = 0.0;
        for (std::size_t n = 0; n < c.frame_len; ++n) {
          const double a = -2.0 * kPi * static_cast<double>(f * n) / static_cast<double>(c.fft_size);
          want += x.at(ch, t * c.hop + n) * w[n] * std::complex<double>(std::cos(a), std::sin(a));
        }
        CHECK(std::abs(s.at(t, f, ch) - want) <= 1e-10 * (1.0 + std::abs(want)));
      }
    }
  }
}

TEST_CASE("DC input yields the window sum at bin 0 only") {
  const StftConfig c;
  MultichannelSignal x(1, 2048, 16000);
  for (auto& v : x.data()) v = 1.0;
  const auto w = sqrt_hann(512);
  double wsum = 0.0;
  for (double v : w) wsum += v;
  const auto s = stft(x, c);
  for (std::size_t t = 0; t < s.frames(); ++t) {
    CHECK(std::abs(s.at(t, 0, 0) - wsum) < 1e-9);
    double rest = 0.0;
    for (std::size_t f = 1; f < s.bins(); ++f) rest += std::norm(s.at(t, f, 0));
    // The sqrt-Hann leaks into neighbouring bins; most energy stays at DC.
    CHECK(rest < std::norm(s.at(t, 0, 0)));
  }
}

TEST_CASE("Parseval per frame") {
  const StftConfig c;
  const auto x = random_signal(1, 2048, 3);
  const auto s = stft(x, c);
  const auto w = sqrt_hann(512);
  for (std::size_t t = 0; t < s.frames(); ++t) {
    double time = 0.0;
    for (std::size_t n = 0; n < 512; ++n) {
      const double v = w[n] * x.at(0, t * 256 + n);
      time += v * v;
    }
    double spec = std::norm(s.at(t, 0, 0)) + std::norm(s.at(t, 256, 0));
    for (std::size_t f = 1; f < 256; ++f) spec += 2 * std::norm(s.at(t, f, 0));
    CHECK(spec / 512.0 == doctest::Approx(time).epsilon(1e-9));
  }
}

TEST_CASE("round trip reconstructs interior samples") {
  const StftConfig c;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_signal(2, 4000 + 37 * seed, seed);
    const auto s = stft(x, c);
    const auto y = istft(s, c);
    const auto r = interior_range(s.frames(), c);
    CHECK(r.begin == 256);
    double err = 0.0, norm = 0.0;
    for (std::size_t ch = 0; ch < 2; ++ch) {
      for (std::size_t n = r.begin; n < r.end; ++n) {
        err += std::pow(y.at(ch, n) - x.at(ch, n), 2);
        norm += x.at(ch, n) * x.at(ch, n);
      }
    }
    CHECK(std::sqrt(err / norm) < 1e-12);
  }
}

TEST_CASE("istft is linear") {
  const StftConfig c;
  Spectrogram a(12, 257, 1), b(12, 257, 1), ab(12, 257, 1);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    a.data()[i] = {nd(rng), nd(rng)};
    b.data()[i] = {nd(rng), nd(rng)};
    ab.data()[i] = 2.5 * a.data()[i] - 0.75 * b.data()[i];
  }
  const auto ya = istft(a, c), yb = istft(b, c), yab = istft(ab, c);
  for (std::size_t n = 0; n < yab.samples(); ++n) {
    CHECK(std::abs(yab.at(0, n) - (2.5 * ya.at(0, n) - 0.75 * yb.at(0, n))) < 1e-10);
  }
  CHECK_THROWS(istft(Spectrogram(4, 200, 1), c));
}

TEST_CASE("istft adjoint satisfies the inner-product identity") {
  // <istft(S), g> = sum over bins of Re(S) * Re(A g) + Im(S) * Im(A g),
  // counting only the real degrees of freedom istft actually reads.
  const StftConfig c{32, 16, 32, 16000};
  const std::size_t frames = 7;
  Spectrogram s(frames, c.bins(), 1);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  for (auto& v : s.data()) v = {nd(rng), nd(rng)};
  const auto y = istft(s, c);
  MultichannelSignal g(1, y.samples(), 16000);
  for (auto& v : g.data()) v = nd(rng);
  double lhs = 0.0;
  for (std::size_t n = 0; n < y.samples(); ++n) lhs += y.at(0, n) * g.at(0, n);

  // Finite differences give the exact derivative of the linear map, so the
  // adjoint must match d<istft(S), g>/dRe and d/dIm per bin.
  const auto adj = istft_adjoint(g, frames, c);
  double rhs = 0.0;
  for (std::size_t i = 0; i < s.data().size(); ++i) {
    Spectrogram e(frames, c.bins(), 1);
    e.data()[i] = 1.0;
    const auto yr = istft(e, c);
    e.data()[i] = std::complex<double>(0.0, 1.0);
    const auto yi = istft(e, c);
    double dr = 0.0, di = 0.0;
    for (std::size_t n = 0; n < g.samples(); ++n) {
      dr += yr.at(0, n) * g.at(0, n);
      di += yi.at(0, n) * g.at(0, n);
    }
    CHECK(adj.data()[i].real() == doctest::Approx(dr).epsilon(1e-10));
    CHECK(adj.data()[i].imag() == doctest::Approx(di).epsilon(1e-10));
    rhs += s.data()[i].real() * dr + s.data()[i].imag() * di;
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("config validation") {
  StftConfig c;
  c.hop = 300;
  CHECK_THROWS(c.validate());
  c = StftConfig{};
  c.fft_size = 256;
  CHECK_THROWS(c.validate());
}
