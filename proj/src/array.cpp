#include "shenh/array.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shenh {

ArrayGeometry::ArrayGeometry(std::vector<MicPosition> mics) : mics_(std::move(mics)) {
  if (mics_.empty()) throw std::invalid_argument("array needs at least one microphone");
  for (const auto& m : mics_) {
    if (!(m.radius >= 0.0) || !std::isfinite(m.radius)) {
      throw std::invalid_argument("microphone radius must be finite and non-negative");
    }
  }
}

std::vector<SphDirection> ArrayGeometry::directions() const {
  std::vector<SphDirection> out;
  out.reserve(mics_.size());
  for (const auto& m : mics_) out.push_back(m.dir);
  return out;
}

std::vector<Vec3> ArrayGeometry::cartesian() const {
  std::vector<Vec3> out;
  out.reserve(mics_.size());
  for (const auto& m : mics_) out.push_back(sph_to_cart(m.radius, m.dir));
  return out;
}

double ArrayGeometry::radius() const {
  double r = 0.0;
  for (const auto& m : mics_) r = std::max(r, m.radius);
  return r;
}

ArrayGeometry uniform_circular_array(std::size_t count, double radius) {
  if (count == 0) throw std::invalid_argument("uniform_circular_array: count must be >= 1");
  if (!(radius >= 0.0)) throw std::invalid_argument("uniform_circular_array: negative radius");
  std::vector<MicPosition> mics;
  mics.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double phi = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(count);
    mics.push_back({radius, SphDirection(kPi / 2.0, phi)});
  }
  return ArrayGeometry(std::move(mics));
}

Vec3 sph_to_cart(double r, const SphDirection& dir) {
  const double st = std::sin(dir.theta());
  // Keep the equator exactly at z = 0.
  const double ct = (dir.theta() == kPi / 2.0) ? 0.0 : std::cos(dir.theta());
  return {r * std::cos(dir.phi()) * st, r * std::sin(dir.phi()) * st, r * ct};
}

SphPoint cart_to_sph(const Vec3& p) {
  const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  if (r == 0.0) return {0.0, SphDirection(0.0, 0.0)};
  const double theta = std::acos(std::clamp(p[2] / r, -1.0, 1.0));
  const double phi = std::atan2(p[1], p[0]);
  return {r, SphDirection(theta, phi)};
}

std::vector<cplx> steering_vector(double wavenumber, const SphDirection& source_dir,
                                  const ArrayGeometry& geometry) {
  if (!(wavenumber >= 0.0)) throw std::invalid_argument("wavenumber must be non-negative");
  const Vec3 u = sph_to_cart(1.0, source_dir);
  std::vector<cplx> v;
  v.reserve(geometry.count());
  for (const auto& r : geometry.cartesian()) {
    const double phase = wavenumber * (u[0] * r[0] + u[1] * r[1] + u[2] * r[2]);
    v.push_back(std::polar(1.0, phase));
  }
  return v;
}

}  // namespace shenh
