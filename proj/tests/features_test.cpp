#include <doctest.h>

#include <cmath>
#include <random>

#include "shenh/features.hpp"

using namespace shenh;

namespace {

Spectrogram random_spec(std::size_t t, std::size_t f, std::size_t c, std::uint64_t seed) {
  Spectrogram s(t, f, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (auto& v : s.data()) v = {nd(rng), nd(rng)};
  return s;
}

}  // namespace

TEST_CASE("feature shapes and channel widths") {
  const auto uca = uniform_circular_array(9, 0.035);
  const auto spec = random_spec(5, 257, 9, 1);
  const auto f4 = extract_sht_features(spec, uca, 4);
  CHECK(f4.coeffs() == 25);
  CHECK(f4.frames() == 5);
  CHECK(f4.bins() == 257);
  const auto par = pack_model_input<float>(spec, f4, Variant::parallel);
  CHECK(par.stft.channels() == 18);
  CHECK(par.sht.channels() == 50);
  CHECK(par.serial.empty());
  const auto ser = pack_model_input<float>(spec, f4, Variant::serial);
  CHECK(ser.serial.channels() == 68);
  CHECK(ser.stft.empty());
  CHECK(extract_sht_features(spec, uca, 2).coeffs() == 9);
  CHECK(pack_model_input<double>(spec, extract_sht_features(spec, uca, 2), Variant::parallel)
            .sht.channels() == 18);

  CHECK_THROWS(extract_sht_features(random_spec(5, 257, 8, 1), uca, 4));
  CHECK_THROWS(pack_model_input<float>(Spectrogram(0, 257, 9), ShtFeatures(0, 257, 4), Variant::parallel));
  CHECK_THROWS(pack_model_input<float>(spec, ShtFeatures(4, 257, 4), Variant::parallel));
}

TEST_CASE("constant and single-channel fields") {
  const auto uca = uniform_circular_array(9, 0.035);
  Spectrogram s(2, 3, 9);
  const std::complex<double> v(0.3, -1.1);
  for (std::size_t i = 0; i < 9; ++i) s.at(1, 2, i) = v;
  auto f = extract_sht_features(s, uca, 4);
  CHECK(std::abs(f.at(1, 2, 0) - v * std::sqrt(4 * kPi)) < 1e-12);
  for (std::size_t q = 1; q < 25; ++q) {
    const ShIndex idx = ShIndex::from_flat(q);
    if (idx.m() != 0) CHECK(std::abs(f.at(1, 2, q)) < 1e-12);
  }
  for (std::size_t q = 0; q < 25; ++q) CHECK(f.at(0, 0, q) == std::complex<double>(0.0, 0.0));

  Spectrogram one(1, 1, 9);
  one.at(0, 0, 4) = v;
  f = extract_sht_features(one, uca, 4);
  for (std::size_t q = 0; q < 25; ++q) {
    const auto want = 4 * kPi / 9.0 * v * std::conj(sph_harm(ShIndex::from_flat(q), uca[4].dir));
    CHECK(std::abs(f.at(0, 0, q) - want) < 1e-13);
  }
}

TEST_CASE("feature extraction is linear and bounded") {
  const auto uca = uniform_circular_array(9, 0.035);
  const auto a = random_spec(3, 17, 9, 2), b = random_spec(3, 17, 9, 3);
  Spectrogram ab(3, 17, 9);
  const std::complex<double> ca(1.5, 0.5), cb(-0.25, 2.0);
  for (std::size_t i = 0; i < ab.data().size(); ++i) ab.data()[i] = ca * a.data()[i] + cb * b.data()[i];
  const auto fa = extract_sht_features(a, uca, 4), fb = extract_sht_features(b, uca, 4),
             fab = extract_sht_features(ab, uca, 4);
  for (std::size_t i = 0; i < fab.data().size(); ++i) {
    const auto want = ca * fa.data()[i] + cb * fb.data()[i];
    CHECK(std::abs(fab.data()[i] - want) <= 1e-12 * std::max(1.0, std::abs(want)));
  }

  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t f = 0; f < 17; ++f) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 9; ++i) sum += std::abs(a.at(t, f, i));
      for (std::size_t q = 0; q < 25; ++q) {
        double ymax = 0.0;
        for (std::size_t i = 0; i < 9; ++i) {
          ymax = std::max(ymax, std::abs(sph_harm(ShIndex::from_flat(q), uca[i].dir)));
        }
        CHECK(std::abs(fa.at(t, f, q)) <= 4 * kPi / 9 * sum * ymax + 1e-12);
      }
    }
  }
}

TEST_CASE("split and join are exact inverses") {
  const auto s = random_spec(4, 9, 3, 5);
  const auto real = split_complex(s.data(), 4, 9, 3);
  CHECK(real.channels() == 6);
  const auto back = join_complex(real);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == s.data()[i]);
}

TEST_CASE("variant names") {
  CHECK(parse_variant("serial") == Variant::serial);
  CHECK(to_string(Variant::parallel) == "parallel");
  CHECK_THROWS(parse_variant("diagonal"));
}

TEST_CASE("cutoff frequency of the feature band") {
  const auto uca = uniform_circular_array(9, 0.035);
  // kr = N at f = N c / (2 pi r).
  CHECK(sht_feature_cutoff_hz(uca, 4) == doctest::Approx(4 * 343.0 / (2 * kPi * 0.035)));
}
