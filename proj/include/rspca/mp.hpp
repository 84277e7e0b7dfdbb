#pragma once

// Marchenko-Pastur law for H = X^T X with X n x p, i.i.d. entries of
// variance 1/n and aspect ratio xi = p/n in (0, 1].

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rspca/errors.hpp"
#include "rspca/quadrature.hpp"

namespace rspca {

using complex = std::complex<double>;

struct SpectralEdges {
  double lower = 0.0;
  double upper = 0.0;
};

[[nodiscard]] inline SpectralEdges mp_edges(double xi) {
  if (!(xi > 0.0 && xi <= 1.0))
    throw DomainError("aspect ratio xi=" + std::to_string(xi) + " outside (0, 1]");
  const double root = std::sqrt(xi);
  return {(1.0 - root) * (1.0 - root), (1.0 + root) * (1.0 + root)};
}

class MPModel {
 public:
  explicit MPModel(double xi, double quadrature_tol = 1e-12)
      : xi_(xi), edges_(mp_edges(xi)), quadrature_tol_(quadrature_tol) {}

  [[nodiscard]] double xi() const noexcept { return xi_; }
  [[nodiscard]] double lambda_minus() const noexcept { return edges_.lower; }
  [[nodiscard]] double lambda_plus() const noexcept { return edges_.upper; }
  [[nodiscard]] double quadrature_tol() const noexcept { return quadrature_tol_; }
  [[nodiscard]] double centre() const noexcept { return 0.5 * (edges_.upper + edges_.lower); }
  [[nodiscard]] double half_width() const noexcept { return 0.5 * (edges_.upper - edges_.lower); }
  [[nodiscard]] bool in_support(double x) const noexcept {
    return x >= edges_.lower && x <= edges_.upper;
  }

 private:
  double xi_;
  SpectralEdges edges_;
  double quadrature_tol_;
};

/// z = E + i*eta with eta >= 0.
struct SpectralParameter {
  double E = 0.0;
  double eta = 0.0;

  [[nodiscard]] complex z() const noexcept { return {E, eta}; }
  /// Distance of E to the nearest spectral edge.
  [[nodiscard]] double kappa(const MPModel& model) const noexcept {
    return std::min(std::abs(E - model.lambda_minus()), std::abs(E - model.lambda_plus()));
  }
};

[[nodiscard]] inline double mp_density(const MPModel& model, double x) {
  if (x <= 0.0) return 0.0;
  const double bracket = (x - model.lambda_minus()) * (model.lambda_plus() - x);
  if (bracket <= 0.0) return 0.0;
  return std::sqrt(bracket) / (2.0 * std::numbers::pi * model.xi() * x);
}

namespace detail {

// Under x = lambda_- + 2r cos^2(theta/2) (theta = 0 at lambda_+), the
// measure rho(x) dx becomes (r sin theta)^2 / (2 pi xi x) dtheta, which is
// smooth on [0, pi] even at the hard edge xi = 1.
inline double mp_position(const MPModel& model, double theta) {
  const double c = std::cos(0.5 * theta);
  return model.lambda_minus() + 2.0 * model.half_width() * c * c;
}

inline double mp_theta_weight(const MPModel& model, double theta) {
  const double s = model.half_width() * std::sin(theta);
  const double x = mp_position(model, theta);
  if (x <= 0.0) return 0.0;
  return s * s / (2.0 * std::numbers::pi * model.xi() * x);
}

inline double mp_theta_of(const MPModel& model, double x) {
  const double t = std::clamp((x - model.lambda_minus()) / (2.0 * model.half_width()), 0.0, 1.0);
  return 2.0 * std::acos(std::sqrt(t));
}

}  // namespace detail

/// \int g(x) rho_MP(x) dx over the support, by adaptive Gauss-Kronrod in
/// the angular variable.
template <typename G>
auto integrate_against_density(const MPModel& model, G g, double theta_lo = 0.0,
                               double theta_hi = std::numbers::pi) {
  auto integrand = [&](double theta) {
    return g(detail::mp_position(model, theta)) * detail::mp_theta_weight(model, theta);
  };
  QuadratureOptions options;
  options.abs_tol = model.quadrature_tol();
  options.rel_tol = model.quadrature_tol();
  return integrate(integrand, theta_lo, theta_hi, options).value;
}

/// Probability mass of rho_MP on [x, lambda_+].
[[nodiscard]] inline double upper_tail_mass(const MPModel& model, double x) {
  if (x >= model.lambda_plus()) return 0.0;
  if (x <= model.lambda_minus()) return 1.0;
  return integrate_against_density(model, [](double) { return 1.0; }, 0.0,
                                   detail::mp_theta_of(model, x));
}

/// Stieltjes transform m(z) = \int rho(x)/(x - z) dx in closed form.
///
/// The root branch is chosen per point: sqrt(z-l-)*sqrt(z-l+) (principal
/// roots) is analytic off the support and ~z at infinity; if the resulting
/// m violates Im m > 0 for Im z > 0 the other sign is taken. Of the two
/// algebraically equivalent forms the one without cancellation is used.
[[nodiscard]] inline complex mp_stieltjes(const MPModel& model, const SpectralParameter& zp) {
  if (zp.eta < 0.0) throw DomainError("spectral parameter must have eta >= 0");
  const complex z = zp.z();
  if (zp.eta == 0.0 && zp.E >= model.lambda_minus() && zp.E <= model.lambda_plus())
    throw DomainError("z=" + std::to_string(zp.E) +
                      " lies on the support; the boundary value needs eta > 0");
  const double xi = model.xi();
  const complex root = std::sqrt(z - model.lambda_minus()) * std::sqrt(z - model.lambda_plus());
  const complex a = 1.0 - xi - z;

  auto evaluate = [&](complex r) {
    const complex plus = a + r;
    const complex minus = a - r;
    // (a + r)(a - r) = 4 xi z, so m = (a + r)/(2 xi z) = 2/(a - r).
    if (std::abs(plus) >= std::abs(minus)) return plus / (2.0 * xi * z);
    return 2.0 / minus;
  };
  complex m = evaluate(root);
  if (zp.eta > 0.0 && m.imag() <= 0.0) {
    const complex other = evaluate(-root);
    if (other.imag() > m.imag()) m = other;
  }
  return m;
}

/// Typical eigenvalue locations gamma_1 > ... > gamma_N, where gamma_k
/// carries upper-tail mass (k - 1/2)/N.
[[nodiscard]] inline std::vector<double> mp_quantiles(const MPModel& model, std::size_t count) {
  if (count == 0) throw RangeError("quantile count must be positive");
  std::vector<double> gammas(count);
  double hi = model.lambda_plus();
  for (std::size_t k = 1; k <= count; ++k) {
    const double target = (static_cast<double>(k) - 0.5) / static_cast<double>(count);
    // Descending targets: each root lies below the previous one.
    double lo = model.lambda_minus();
    double upper = hi;
    while (upper - lo > 1e-10) {
      const double mid = 0.5 * (lo + upper);
      if (upper_tail_mass(model, mid) > target)
        lo = mid;
      else
        upper = mid;
    }
    gammas[k - 1] = 0.5 * (lo + upper);
    hi = gammas[k - 1];
  }
  return gammas;
}

/// Spectral domain on which the local law is stated.
[[nodiscard]] inline bool in_spectral_domain(const MPModel& model, const SpectralParameter& zp) {
  const double e_lo = model.xi() < 1.0 ? 0.5 * model.lambda_minus() : 0.1;
  return zp.E >= e_lo && zp.E <= model.lambda_plus() + 1.0 && zp.eta > 0.0 && zp.eta < 3.0;
}

struct ImEnvelope {
  double shape = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  [[nodiscard]] bool contains(double value) const noexcept { return value >= lower && value <= upper; }
};

/// Comparison band for Im m(z) on the spectral domain. The edge behaviour
/// sqrt(kappa + eta) (inside the support) or eta/sqrt(kappa + eta)
/// (outside) is multiplied by the near-edge amplitude
/// sqrt(lambda_+ - lambda_-)/(2 xi |z|); Im m then lies in [0.01, 10]
/// times this shape for every xi in (0, 1].
[[nodiscard]] inline ImEnvelope im_m_edge_estimate(const MPModel& model, const SpectralParameter& zp) {
  if (!in_spectral_domain(model, zp))
    throw DomainError("z=(" + std::to_string(zp.E) + ", " + std::to_string(zp.eta) +
                      ") outside the spectral domain");
  const double kappa = zp.kappa(model);
  const double root = std::sqrt(kappa + zp.eta);
  const double edge_shape = model.in_support(zp.E) ? root : zp.eta / root;
  const double amplitude = std::sqrt(model.lambda_plus() - model.lambda_minus()) /
                           (2.0 * model.xi() * std::abs(zp.z()));
  const double shape = amplitude * edge_shape;
  return {shape, 0.01 * shape, 10.0 * shape};
}

}  // namespace rspca
