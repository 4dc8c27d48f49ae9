#include <doctest.h>

#include <cmath>
#include <random>

#include "shenh/array.hpp"

using namespace shenh;

TEST_CASE("uniform circular array layout") {
  const auto uca = uniform_circular_array(9, 0.035);
  REQUIRE(uca.count() == 9);
  const auto pos = uca.cartesian();
  CHECK(pos[0][0] == doctest::Approx(0.035));
  CHECK(std::abs(pos[0][1]) < 1e-15);
  CHECK(pos[0][2] == 0.0);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(pos[i][2] == 0.0);
    CHECK(std::hypot(pos[i][0], pos[i][1]) == doctest::Approx(0.035).epsilon(1e-14));
    CHECK(uca[i].dir.theta() == doctest::Approx(kPi / 2));
  }
  CHECK((uca[1].dir.phi() - uca[0].dir.phi()) * 180 / kPi == doctest::Approx(40.0));
  CHECK(uca.radius() == doctest::Approx(0.035));

  const auto single = uniform_circular_array(1, 0.0);
  const auto p = single.cartesian()[0];
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 0.0);
  CHECK(p[2] == 0.0);
  CHECK_THROWS(uniform_circular_array(0, 0.035));
}

TEST_CASE("sph_to_cart follows the component formula") {
  auto p = sph_to_cart(1, SphDirection(0, 1.234));
  CHECK(std::abs(p[0]) < 1e-15);
  CHECK(std::abs(p[1]) < 1e-15);
  CHECK(p[2] == doctest::Approx(1.0));
  p = sph_to_cart(1, SphDirection(kPi / 2, 0));
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(std::abs(p[2]) < 1e-15);
  p = sph_to_cart(2, SphDirection(kPi / 3, kPi / 4));
  CHECK(p[0] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(p[2] == doctest::Approx(1.0));
}

TEST_CASE("cart_to_sph inverts sph_to_cart") {
  auto s = cart_to_sph({0, 0, 1});
  CHECK(s.r == doctest::Approx(1.0));
  CHECK(s.dir.theta() == 0.0);
  CHECK(s.dir.phi() == 0.0);
  s = cart_to_sph({1, 0, 0});
  CHECK(s.dir.theta() == doctest::Approx(kPi / 2));
  CHECK(s.dir.phi() == 0.0);
  s = cart_to_sph({0, 0, 0});
  CHECK(s.r == 0.0);
  CHECK(s.dir.theta() == 0.0);
  CHECK(s.dir.phi() == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1), lr(-6, 3);
  for (int i = 0; i < 1000; ++i) {
    Vec3 v{u(rng), u(rng), u(rng)};
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    const double r = std::pow(10.0, lr(rng));
    for (auto& c : v) c *= r / n;
    const auto back = sph_to_cart(cart_to_sph(v).r, cart_to_sph(v).dir);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(back[k] - v[k]) <= 1e-12 * std::max(1.0, r));
  }
}

TEST_CASE("steering vector") {
  const auto uca = uniform_circular_array(9, 0.035);
  for (const auto& v : steering_vector(0.0, SphDirection(1.0, 2.0), uca)) {
    CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-15);
  }
  const auto origin = uniform_circular_array(1, 0.0);
  CHECK(std::abs(steering_vector(50.0, SphDirection(0.3, 0.3), origin)[0] - 1.0) < 1e-15);

  const double k = 2 * kPi * 1000 / 343;
  const ArrayGeometry one({MicPosition{0.035, SphDirection(kPi / 2, 0)}});
  const auto v = steering_vector(k, SphDirection(kPi / 2, 0), one);
  CHECK(std::arg(v[0]) == doctest::Approx(0.6412).epsilon(1e-4));
  CHECK(std::arg(v[0]) == doctest::Approx(k * 0.035));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> th(0, kPi), ph(0, 2 * kPi), kk(0, 200);
  for (int i = 0; i < 100; ++i) {
    for (const auto& e : steering_vector(kk(rng), SphDirection(th(rng), ph(rng)), uca)) {
      CHECK(std::abs(e) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}
