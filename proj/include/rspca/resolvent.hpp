#pragma once

// Resolvent of the linearisation,
//
//   R(z) = [[-I_n, X], [X^T, -z I_p]]^{-1},
//
// indexed by I = I_1 (the n sample rows) followed by I_2 (the p features).
// Blocks via the Schur complement S = H - z:
//   R_22 = S^{-1},  R_12 = X S^{-1},  R_21 = S^{-1} X^T,  R_11 = -I + X S^{-1} X^T
// (R_11 equals z (X X^T - z)^{-1}).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "rspca/ensemble.hpp"
#include "rspca/errors.hpp"
#include "rspca/mp.hpp"
#include "rspca/spectral.hpp"

namespace rspca {

using ComplexMatrix = Eigen::MatrixXcd;

struct ResolventProbe {
  SpectralParameter z;
  std::size_t n = 0;
  std::size_t p = 0;
  ComplexMatrix R;        // (n + p) x (n + p)
  double residual = 0.0;  // max |M R - I| entry, 0 when not validated

  [[nodiscard]] auto sample_block() const { return R.topLeftCorner(n, n); }
  [[nodiscard]] auto feature_block() const { return R.bottomRightCorner(p, p); }
};

enum class Validation { full, skip };

namespace detail {

inline Eigen::PartialPivLU<ComplexMatrix> factor_shifted_gram(const DataMatrix& x,
                                                              const SpectralParameter& zp) {
  const complex z = zp.z();
  ComplexMatrix shifted = gram(x).cast<complex>();
  shifted.diagonal().array() -= z;
  Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw SingularityError("H - z is singular at z=(" + std::to_string(zp.E) + ", " +
                           std::to_string(zp.eta) + "), rcond=" + std::to_string(rcond));
  return lu;
}

}  // namespace detail

/// (H - z)^{-1}, the I_2 block of R(z).
[[nodiscard]] inline ComplexMatrix feature_resolvent(const DataMatrix& x, const SpectralParameter& zp) {
  const auto p = x.entries.cols();
  auto lu = detail::factor_shifted_gram(x, zp);
  return lu.solve(ComplexMatrix::Identity(p, p));
}

inline ResolventProbe resolvent_at(const DataMatrix& x, const SpectralParameter& zp,
                                   Validation validation = Validation::full) {
  if (zp.eta < 0.0) throw DomainError("resolvent needs eta >= 0");
  const Eigen::Index n = x.entries.rows();
  const Eigen::Index p = x.entries.cols();
  const complex z = zp.z();
  const ComplexMatrix xc = x.entries.cast<complex>();

  auto lu = detail::factor_shifted_gram(x, zp);
  const ComplexMatrix s_inv = lu.solve(ComplexMatrix::Identity(p, p));
  // S is complex symmetric, so (X S^{-1})^T = S^{-1} X^T.
  const ComplexMatrix x_s_inv = xc * s_inv;

  ResolventProbe probe{zp, static_cast<std::size_t>(n), static_cast<std::size_t>(p),
                       ComplexMatrix(n + p, n + p), 0.0};
  auto& r = probe.R;
  r.topLeftCorner(n, n) = x_s_inv * xc.transpose();
  r.topLeftCorner(n, n).diagonal().array() -= 1.0;
  r.topRightCorner(n, p) = x_s_inv;
  r.bottomLeftCorner(p, n) = x_s_inv.transpose();
  r.bottomRightCorner(p, p) = s_inv;

  if (validation == Validation::full) {
    // M R blockwise, M = [[-I, X], [X^T, -z I]].
    const auto r11 = r.topLeftCorner(n, n);
    const auto r12 = r.topRightCorner(n, p);
    const auto r21 = r.bottomLeftCorner(p, n);
    const auto r22 = r.bottomRightCorner(p, p);
    ComplexMatrix top_left = -r11 + xc * r21;
    top_left.diagonal().array() -= 1.0;
    const ComplexMatrix top_right = -r12 + xc * r22;
    const ComplexMatrix bottom_left = xc.transpose() * r11 - z * r21;
    ComplexMatrix bottom_right = xc.transpose() * r12 - z * r22;
    bottom_right.diagonal().array() -= 1.0;
    probe.residual = std::max({top_left.cwiseAbs().maxCoeff(), top_right.cwiseAbs().maxCoeff(),
                               bottom_left.cwiseAbs().maxCoeff(), bottom_right.cwiseAbs().maxCoeff()});
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    if (probe.residual > 1e-9 * scale)
      throw SingularityError("resolvent system residual " + std::to_string(probe.residual) +
                             " too large at z=(" + std::to_string(zp.E) + ", " +
                             std::to_string(zp.eta) + ")");
  }
  return probe;
}

/// Deterministic diagonal limit G(z): -(1 + m)^{-1} on I_1, m on I_2.
struct DeterministicLimit {
  SpectralParameter z;
  std::size_t n = 0;
  std::size_t p = 0;
  complex m;            // value on I_2
  complex sample_value; // value on I_1

  [[nodiscard]] Eigen::VectorXcd diagonal() const {
    Eigen::VectorXcd d(static_cast<Eigen::Index>(n + p));
    d.head(static_cast<Eigen::Index>(n)).setConstant(sample_value);
    d.tail(static_cast<Eigen::Index>(p)).setConstant(m);
    return d;
  }
};

inline DeterministicLimit deterministic_limit(const MPModel& model, const SpectralParameter& zp,
                                              std::size_t n, std::size_t p) {
  const complex m = mp_stieltjes(model, zp);
  const complex denom = 1.0 + m;
  if (std::abs(denom) < 1e-300) throw SingularityError("1 + m(z) vanishes; G(z) has a pole");
  return {zp, n, p, m, -1.0 / denom};
}

/// Local-law gauge Psi(z) = n^eps (sqrt(Im m / (n eta)) + 1/(n eta)).
[[nodiscard]] inline double local_law_gauge(complex m, double eta, std::size_t n, double epsilon = 0.0) {
  const double ne = static_cast<double>(n) * eta;
  return std::pow(static_cast<double>(n), epsilon) * (std::sqrt(std::max(0.0, m.imag()) / ne) + 1.0 / ne);
}

struct LocalLawGap {
  double max_offdiag = 0.0;
  double max_diag_dev = 0.0;
  double psi = 0.0;
};

inline LocalLawGap local_law_gap(const ResolventProbe& probe, const DeterministicLimit& g,
                                 double epsilon = 0.0) {
  if (probe.n != g.n || probe.p != g.p)
    throw ShapeError("resolvent is " + std::to_string(probe.n) + "+" + std::to_string(probe.p) +
                     " but G is " + std::to_string(g.n) + "+" + std::to_string(g.p));
  if (probe.z.E != g.z.E || probe.z.eta != g.z.eta)
    throw ShapeError("resolvent and deterministic limit evaluated at different z");
  LocalLawGap out;
  const Eigen::VectorXcd diag = g.diagonal();
  const Eigen::Index size = probe.R.rows();
  for (Eigen::Index b = 0; b < size; ++b) {
    for (Eigen::Index a = 0; a < size; ++a) {
      const double v = std::abs(probe.R(a, b));
      if (a == b)
        out.max_diag_dev = std::max(out.max_diag_dev, std::abs(probe.R(a, a) - diag(a)));
      else
        out.max_offdiag = std::max(out.max_offdiag, v);
    }
  }
  out.psi = local_law_gauge(g.m, probe.z.eta, probe.n, epsilon);
  return out;
}

/// Rebuilds R(z) from eigendata alone:
///   R_ij = sum_l z u_l(i) u_l(j)/(lambda_l - z) - P_perp(i, j)
///   R_ab = sum_l v_l(a) v_l(b)/(lambda_l - z)
///   R_ia = sum_l sqrt(lambda_l) u_l(i) v_l(a)/(lambda_l - z)
/// where P_perp projects onto the complement of the defined u_l (the zero
/// modes, each contributing z/(0 - z) = -1).
inline ComplexMatrix spectral_rep_oracle(const SpectralSummary& s, const SpectralParameter& zp) {
  const complex z = zp.z();
  const auto n = static_cast<Eigen::Index>(s.n());
  const auto p = static_cast<Eigen::Index>(s.p());
  Eigen::VectorXcd weight(p);
  for (Eigen::Index l = 0; l < p; ++l) {
    const complex d = s.eigenvalues(l) - z;
    if (std::abs(d) < 1e-14 * std::max(1.0, std::abs(z)))
      throw SingularityError("z coincides with eigenvalue " + std::to_string(s.eigenvalues(l)));
    weight(l) = 1.0 / d;
  }
  if (std::abs(z) == 0.0 && n > 0) throw SingularityError("z = 0 is on the spectrum of X X^T");

  Eigen::MatrixXd u_defined = s.left_vectors;
  Eigen::VectorXd sigma = s.singular_values;
  for (Eigen::Index l = 0; l < p; ++l) {
    if (!s.left_defined[static_cast<std::size_t>(l)]) {
      u_defined.col(l).setZero();
      sigma(l) = 0.0;
    }
  }
  const ComplexMatrix u = u_defined.cast<complex>();
  const ComplexMatrix v = s.right_vectors.cast<complex>();

  ComplexMatrix r(n + p, n + p);
  r.bottomRightCorner(p, p) = v * weight.asDiagonal() * v.transpose();
  const Eigen::VectorXcd sample_weight = (z * weight.array() + 1.0).matrix();  // z/(l - z) + 1
  r.topLeftCorner(n, n) = u * sample_weight.asDiagonal() * u.transpose();
  r.topLeftCorner(n, n).diagonal().array() -= 1.0;
  const Eigen::VectorXcd cross_weight = (sigma.cast<complex>().array() * weight.array()).matrix();
  r.topRightCorner(n, p) = u * cross_weight.asDiagonal() * v.transpose();
  r.bottomLeftCorner(p, n) = r.topRightCorner(n, p).transpose();
  return r;
}

struct Reconstruction {
  Eigen::VectorXd v_hat;
  double quality = 0.0;
  std::size_t anchor = 0;   // 0-based feature index alpha*
  bool validated = false;   // quality is an overlap with an exact vector
};

namespace detail {

inline Reconstruction reconstruct_from_feature_block(const DataMatrix& x, const ComplexMatrix& r22,
                                                     double eta) {
  // M_ab = eta Im R_ab ~ v(a) v(b) near the top eigenvalue.
  const Eigen::MatrixXd m = eta * r22.imag();
  Eigen::Index anchor = 0;
  const double top = m.diagonal().maxCoeff(&anchor);
  if (!(top > 0.0))
    throw ReconstructionError("anchor weight eta*Im R_aa is not positive; eta too large or hint too far");
  Reconstruction out;
  out.v_hat = m.col(anchor) / std::sqrt(top);
  const double norm = out.v_hat.norm();
  if (!(norm > 0.0)) throw ReconstructionError("reconstructed vector vanished");
  out.v_hat /= norm;
  apply_sign_convention(out.v_hat);
  out.anchor = static_cast<std::size_t>(anchor);
  // Self-check when no exact vector is supplied: 1 - relative residual.
  const Eigen::VectorXd hv = x.entries.transpose() * (x.entries * out.v_hat);
  const double rayleigh = out.v_hat.dot(hv);
  const double residual = (hv - rayleigh * out.v_hat).norm() / std::max(1.0, std::abs(rayleigh));
  out.quality = std::clamp(1.0 - residual, 0.0, 1.0);
  return out;
}

}  // namespace detail

/// Top right eigenvector read off the resolvent at z = lambda_hint + i eta.
inline Reconstruction eigvec_reconstruct(const DataMatrix& x, double lambda_hint, double eta) {
  if (!(eta > 0.0)) throw DomainError("reconstruction needs eta > 0");
  const SpectralParameter zp{lambda_hint, eta};
  return detail::reconstruct_from_feature_block(x, feature_resolvent(x, zp), eta);
}

/// As above, with quality = |<v_hat, v_1>| against the exact top vector.
inline Reconstruction eigvec_reconstruct(const DataMatrix& x, double lambda_hint, double eta,
                                         const SpectralSummary& exact) {
  Reconstruction out = eigvec_reconstruct(x, lambda_hint, eta);
  out.quality = std::abs(out.v_hat.dot(exact.right_vectors.col(0)));
  out.validated = true;
  return out;
}

}  // namespace rspca
