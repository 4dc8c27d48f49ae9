#pragma once

// Test-side references that share no code with the library.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "shenh/spherical.hpp"

namespace testing_support {

// Decay time by backward integration and a least-squares line on the
// -5..-25 dB segment, extrapolated to -60 dB.
inline double schroeder_t60(std::span<const double> h, double fs) {
  std::vector<double> e(h.size());
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    e[i] = acc;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double db = 10 * std::log10(e[i] / e[0]);
    if (db > -5 || db < -25) continue;
    const double t = i / fs;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    n += 1;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -60.0 / slope;
}

// Near-uniform directions, so equal 4 pi / I weights are a fair cubature.
inline std::vector<shenh::SphDirection> fibonacci_sphere(std::size_t count) {
  constexpr double pi = std::numbers::pi;
  const double golden = pi * (3.0 - std::sqrt(5.0));
  std::vector<shenh::SphDirection> dirs;
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    dirs.emplace_back(std::acos(z), std::fmod(golden * i, 2 * pi));
  }
  return dirs;
}

}  // namespace testing_support
