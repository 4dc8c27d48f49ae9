#pragma once

#include <array>
#include <vector>

#include "shenh/spherical.hpp"

namespace shenh {

using Vec3 = std::array<double, 3>;

struct MicPosition {
  double radius = 0.0;
  SphDirection dir;
};

/// Microphone positions relative to the array center, in the spherical
/// convention of SphDirection.
class ArrayGeometry {
 public:
  explicit ArrayGeometry(std::vector<MicPosition> mics);

  std::size_t count() const { return mics_.size(); }
  const MicPosition& operator[](std::size_t i) const { return mics_[i]; }
  const std::vector<MicPosition>& mics() const { return mics_; }

  std::vector<SphDirection> directions() const;
  std::vector<Vec3> cartesian() const;
  /// Largest mic radius.
  double radius() const;

 private:
  std::vector<MicPosition> mics_;
};

/// Plane wave with propagation direction and complex amplitude.
struct PlaneWaveSource {
  SphDirection direction;
  cplx amplitude{1.0, 0.0};
};

/// I mics on the equator, phi_i = 2 pi i / I.
ArrayGeometry uniform_circular_array(std::size_t count, double radius);

Vec3 sph_to_cart(double r, const SphDirection& dir);

struct SphPoint {
  double r = 0.0;
  SphDirection dir;
};

/// Inverse of sph_to_cart. The origin maps to (0, theta=0, phi=0).
SphPoint cart_to_sph(const Vec3& p);

/// Plane-wave steering vector. With the wave-number vector
/// k_l = -k (cos phi sin theta, sin phi sin theta, cos theta), entry i is
/// exp(-j k_l . r_i) = exp(+j k u(dir) . r_i).
std::vector<cplx> steering_vector(double wavenumber, const SphDirection& source_dir,
                                  const ArrayGeometry& geometry);

}  // namespace shenh
