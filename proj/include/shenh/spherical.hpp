#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace shenh {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Direction on the unit sphere. theta is the polar angle measured down from
/// +z, phi the azimuth measured counterclockwise from +x.
class SphDirection {
 public:
  SphDirection() = default;
  /// Throws std::domain_error if theta is outside [0, pi]; phi is wrapped
  /// into [0, 2pi).
  SphDirection(double theta, double phi);

  double theta() const { return theta_; }
  double phi() const { return phi_; }

 private:
  double theta_ = 0.0;
  double phi_ = 0.0;
};

/// Order/degree pair (n, m) with |m| <= n.
class ShIndex {
 public:
  ShIndex(int n, int m);

  int n() const { return n_; }
  int m() const { return m_; }

  /// ACN position n^2 + n + m.
  std::size_t flat() const { return static_cast<std::size_t>(n_ * n_ + n_ + m_); }
  static ShIndex from_flat(std::size_t flat);

 private:
  int n_;
  int m_;
};

inline std::size_t sh_count(int order) {
  return static_cast<std::size_t>((order + 1) * (order + 1));
}

/// Spherical-harmonic coefficients up to a truncation order, ACN ordered.
class ShCoeffVector {
 public:
  explicit ShCoeffVector(int order);
  ShCoeffVector(int order, std::vector<cplx> values);

  int order() const { return order_; }
  std::size_t size() const { return values_.size(); }

  cplx& operator[](std::size_t flat) { return values_[flat]; }
  const cplx& operator[](std::size_t flat) const { return values_[flat]; }
  cplx& at(int n, int m) { return values_[ShIndex(n, m).flat()]; }
  const cplx& at(int n, int m) const { return values_[ShIndex(n, m).flat()]; }

  std::span<const cplx> values() const { return values_; }
  std::span<cplx> values() { return values_; }

 private:
  int order_;
  std::vector<cplx> values_;
};

class ArrayGeometry;

/// Unnormalized associated Legendre function P_n^m(x), Condon-Shortley phase
/// included, 0 <= m <= n.
double assoc_legendre(int n, int m, double x);

/// Orthonormal complex spherical harmonic Y_n^m(theta, phi).
cplx sph_harm(const ShIndex& idx, const SphDirection& dir);

/// All Y_n^m for n <= order at one direction, ACN ordered.
std::vector<cplx> sph_harm_all(int order, const SphDirection& dir);

/// Discrete SHT over the microphones of `geometry`:
/// p_nm = (4 pi / I) sum_i p_i conj(Y_n^m(theta_i, phi_i)).
ShCoeffVector sht_forward(std::span<const cplx> samples, const ArrayGeometry& geometry,
                          int order);

/// Same transform for an arbitrary set of sample directions.
ShCoeffVector sht_forward(std::span<const cplx> samples, std::span<const SphDirection> dirs,
                          int order);

/// Truncated synthesis sum_{n,m} p_nm Y_n^m(dir).
cplx sht_inverse(const ShCoeffVector& coeffs, const SphDirection& dir);

/// Product-grid quadrature (Clenshaw-Curtis in theta, trapezoid in phi) of the
/// continuous SHT integral
/// int int f(theta, phi) conj(Y_n^m) sin(theta) dtheta dphi. Used as an oracle for
/// sht_forward. Rejects grids with fewer than 2(n+1) points per axis.
class QuadratureGrid {
 public:
  QuadratureGrid(std::size_t n_theta, std::size_t n_phi);

  std::size_t n_theta() const { return n_theta_; }
  std::size_t n_phi() const { return n_phi_; }

  cplx integrate(const std::function<cplx(const SphDirection&)>& field,
                 const ShIndex& idx) const;

  /// Inner product <f, g> = int int f conj(g) dOmega.
  cplx inner(const std::function<cplx(const SphDirection&)>& f,
             const std::function<cplx(const SphDirection&)>& g) const;

 private:
  std::size_t n_theta_;
  std::size_t n_phi_;
  std::vector<double> theta_;
  std::vector<double> theta_weight_;  // quadrature weight times sin(theta)
  double dphi_;
};

/// Minimum source distance 8 r^2 f / c for the plane-wave approximation.
double far_field_min_distance(double array_radius, double freq_hz, double sound_speed);

/// Frequency above which kr exceeds the truncation order for a given radius.
double sht_cutoff_frequency(int order, double array_radius, double sound_speed);

}  // namespace shenh
