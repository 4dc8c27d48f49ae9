#include "shenh/spherical.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "shenh/array.hpp"

namespace shenh {

SphDirection::SphDirection(double theta, double phi) {
  if (!(theta >= 0.0 && theta <= kPi)) {
    throw std::domain_error("theta outside [0, pi]: " + std::to_string(theta));
  }
  if (!std::isfinite(phi)) throw std::domain_error("phi is not finite");
  phi = std::fmod(phi, 2.0 * kPi);
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi = 0.0;
  theta_ = theta;
  phi_ = phi;
}

ShIndex::ShIndex(int n, int m) : n_(n), m_(m) {
  if (n < 0 || m < -n || m > n) {
    throw std::domain_error("invalid spherical harmonic index (" + std::to_string(n) + ", " +
                            std::to_string(m) + ")");
  }
}

ShIndex ShIndex::from_flat(std::size_t flat) {
  const int n = static_cast<int>(std::floor(std::sqrt(static_cast<double>(flat))));
  const int m = static_cast<int>(flat) - n * n - n;
  return ShIndex(n, m);
}

ShCoeffVector::ShCoeffVector(int order) : order_(order) {
  if (order < 0) throw std::domain_error("negative truncation order");
  values_.assign(sh_count(order), cplx{});
}

ShCoeffVector::ShCoeffVector(int order, std::vector<cplx> values)
    : order_(order), values_(std::move(values)) {
  if (order < 0) throw std::domain_error("negative truncation order");
  if (values_.size() != sh_count(order)) {
    throw std::invalid_argument("coefficient count does not match (order+1)^2");
  }
}

double assoc_legendre(int n, int m, double x) {
  if (m < 0 || m > n) throw std::domain_error("assoc_legendre requires 0 <= m <= n");
  if (!(std::abs(x) <= 1.0)) throw std::domain_error("assoc_legendre requires |x| <= 1");

  // P_m^m = (-1)^m (2m-1)!! (1-x^2)^{m/2}
  double pmm = 1.0;
  const double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
  double odd = 1.0;
  for (int i = 1; i <= m; ++i) {
    pmm *= -odd * somx2;
    odd += 2.0;
  }
  if (n == m) return pmm;

  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (n == m + 1) return pmmp1;

  double pnm = 0.0;
  for (int l = m + 2; l <= n; ++l) {
    pnm = (x * (2.0 * l - 1.0) * pmmp1 - (l + m - 1.0) * pmm) / (l - m);
    pmm = pmmp1;
    pmmp1 = pnm;
  }
  return pnm;
}

namespace {

// sqrt((2n+1)/(4 pi) * (n-m)!/(n+m)!) for m >= 0
double sh_norm(int n, int m) {
  double ratio = 1.0;
  for (int k = n - m + 1; k <= n + m; ++k) ratio /= k;
  return std::sqrt((2.0 * n + 1.0) / (4.0 * kPi) * ratio);
}

}  // namespace

cplx sph_harm(const ShIndex& idx, const SphDirection& dir) {
  const int n = idx.n();
  const int am = std::abs(idx.m());
  const double value = sh_norm(n, am) * assoc_legendre(n, am, std::cos(dir.theta()));
  const cplx positive = std::polar(value, am * dir.phi());
  if (idx.m() >= 0) return positive;
  const double sign = (am % 2 == 0) ? 1.0 : -1.0;
  return sign * std::conj(positive);
}

std::vector<cplx> sph_harm_all(int order, const SphDirection& dir) {
  std::vector<cplx> out(sh_count(order));
  for (int n = 0; n <= order; ++n) {
    for (int m = -n; m <= n; ++m) {
      const ShIndex idx(n, m);
      out[idx.flat()] = sph_harm(idx, dir);
    }
  }
  return out;
}

ShCoeffVector sht_forward(std::span<const cplx> samples, std::span<const SphDirection> dirs,
                          int order) {
  if (dirs.empty()) throw std::invalid_argument("sht_forward needs at least one sample");
  if (samples.size() != dirs.size()) {
    throw std::invalid_argument("sht_forward: " + std::to_string(samples.size()) +
                                " samples for " + std::to_string(dirs.size()) + " directions");
  }
  ShCoeffVector out(order);
  const double scale = 4.0 * kPi / static_cast<double>(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto y = sph_harm_all(order, dirs[i]);
    for (std::size_t q = 0; q < y.size(); ++q) out[q] += samples[i] * std::conj(y[q]);
  }
  for (auto& v : out.values()) v *= scale;
  return out;
}

ShCoeffVector sht_forward(std::span<const cplx> samples, const ArrayGeometry& geometry,
                          int order) {
  const auto dirs = geometry.directions();
  return sht_forward(samples, std::span<const SphDirection>(dirs), order);
}

cplx sht_inverse(const ShCoeffVector& coeffs, const SphDirection& dir) {
  const auto y = sph_harm_all(coeffs.order(), dir);
  cplx acc{};
  for (std::size_t q = 0; q < y.size(); ++q) acc += coeffs[q] * y[q];
  return acc;
}

QuadratureGrid::QuadratureGrid(std::size_t n_theta, std::size_t n_phi)
    : n_theta_(n_theta), n_phi_(n_phi) {
  if (n_theta < 2 || n_phi < 2) throw std::invalid_argument("quadrature grid too coarse");
  // Clenshaw-Curtis weights on the uniform theta grid theta_j = j pi / N. They
  // integrate f(cos theta) sin theta exactly for polynomials of degree <= N.
  const std::size_t intervals = n_theta - 1;
  theta_.resize(n_theta);
  theta_weight_.resize(n_theta);
  for (std::size_t j = 0; j < n_theta; ++j) {
    const double th = kPi * static_cast<double>(j) / static_cast<double>(intervals);
    double sum = 0.0;
    for (std::size_t k = 1; k <= intervals / 2; ++k) {
      const double b = (2 * k == intervals) ? 1.0 : 2.0;
      sum += b / (4.0 * static_cast<double>(k * k) - 1.0) * std::cos(2.0 * k * th);
    }
    const double c = (j == 0 || j == intervals) ? 1.0 : 2.0;
    theta_[j] = th;
    theta_weight_[j] = c / static_cast<double>(intervals) * (1.0 - sum);
  }
  dphi_ = 2.0 * kPi / static_cast<double>(n_phi);
}

cplx QuadratureGrid::integrate(const std::function<cplx(const SphDirection&)>& field,
                               const ShIndex& idx) const {
  const std::size_t need = 2 * static_cast<std::size_t>(idx.n() + 1);
  if (n_theta_ < need || n_phi_ < need) {
    throw std::invalid_argument("quadrature grid too coarse for order " +
                                std::to_string(idx.n()));
  }
  return inner(field, [&idx](const SphDirection& d) { return sph_harm(idx, d); });
}

cplx QuadratureGrid::inner(const std::function<cplx(const SphDirection&)>& f,
                           const std::function<cplx(const SphDirection&)>& g) const {
  cplx acc{};
  for (std::size_t j = 0; j < n_theta_; ++j) {
    cplx row{};
    for (std::size_t k = 0; k < n_phi_; ++k) {
      const SphDirection d(theta_[j], dphi_ * static_cast<double>(k));
      row += f(d) * std::conj(g(d));
    }
    acc += row * theta_weight_[j];
  }
  return acc * dphi_;
}

double far_field_min_distance(double array_radius, double freq_hz, double sound_speed) {
  if (!(sound_speed > 0.0)) throw std::invalid_argument("sound speed must be positive");
  if (array_radius < 0.0 || freq_hz < 0.0) {
    throw std::invalid_argument("radius and frequency must be non-negative");
  }
  return 8.0 * array_radius * array_radius * freq_hz / sound_speed;
}

double sht_cutoff_frequency(int order, double array_radius, double sound_speed) {
  if (array_radius <= 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(order) * sound_speed / (2.0 * kPi * array_radius);
}

}  // namespace shenh
