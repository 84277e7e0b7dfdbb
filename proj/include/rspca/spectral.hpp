#pragma once

// Spectral decompositions of H = X^T X and related diagnostics.
//
// Conventions: eigenvalues are sorted descending; each right vector v_i is
// flipped so its largest-magnitude coordinate is positive (lowest index on
// ties) and u_i = X v_i / |X v_i| inherits that sign.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rspca/ensemble.hpp"
#include "rspca/errors.hpp"
#include "rspca/rng.hpp"

namespace rspca {

namespace tolerance {
inline constexpr double orth = 1e-9;
inline constexpr double rank = 1e-12;
[[nodiscard]] inline double eig(double top_eigenvalue) { return 1e-9 * std::max(1.0, top_eigenvalue); }
/// Top eigenvalue counts as simple when the gap exceeds this.
[[nodiscard]] inline double simple_gap(double top_eigenvalue) { return 10.0 * eig(top_eigenvalue); }
}  // namespace tolerance

/// Flips v so that its largest-magnitude coordinate is positive.
/// Returns the sign that was applied.
inline double apply_sign_convention(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (v.size() > 0 && v(best) < 0.0) {
    v = -v;
    return -1.0;
  }
  return 1.0;
}

/// sqrt(len) * ||v||_inf: 1 for a flat vector, sqrt(len) for a basis vector.
[[nodiscard]] inline double scaled_sup_norm(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(static_cast<double>(v.size())) * v.cwiseAbs().maxCoeff();
}

struct SpectralSummary {
  Eigen::VectorXd eigenvalues;      // lambda_1 >= ... >= lambda_p
  Eigen::MatrixXd right_vectors;    // p x p, column i is v_i
  Eigen::MatrixXd left_vectors;     // n x p, column i is u_i (zero if undefined)
  std::vector<bool> left_defined;   // false where sigma_i is numerically zero
  Eigen::VectorXd singular_values;  // sqrt(max(lambda_i, 0))
  double top_gap = 0.0;             // lambda_1 - lambda_2 (0 when p = 1)
  double sup_norm_v = 0.0;          // ||v_1||_inf
  double sup_norm_u = 0.0;          // ||u_1||_inf

  [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(left_vectors.rows()); }
  [[nodiscard]] std::size_t p() const noexcept { return static_cast<std::size_t>(right_vectors.rows()); }
  [[nodiscard]] double top_eigenvalue() const { return eigenvalues(0); }
  [[nodiscard]] Eigen::VectorXd top_right() const { return right_vectors.col(0); }
  [[nodiscard]] Eigen::VectorXd top_left() const { return left_vectors.col(0); }
  [[nodiscard]] bool top_is_simple() const {
    return p() < 2 || top_gap > tolerance::simple_gap(top_eigenvalue());
  }
};

[[nodiscard]] inline Eigen::MatrixXd gram(const DataMatrix& x) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.entries.cols(), x.entries.cols());
  h.selfadjointView<Eigen::Lower>().rankUpdate(x.entries.transpose());
  return h.selfadjointView<Eigen::Lower>();
}

inline SpectralSummary decompose(const DataMatrix& x) {
  if (!x.entries.allFinite()) throw DomainError("data matrix has non-finite entries");
  const Eigen::Index p = x.entries.cols();
  const Eigen::Index n = x.entries.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram(x));
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed");

  SpectralSummary s;
  s.eigenvalues = solver.eigenvalues().reverse();
  s.right_vectors = solver.eigenvectors().rowwise().reverse();
  s.left_vectors = Eigen::MatrixXd::Zero(n, p);
  s.left_defined.assign(static_cast<std::size_t>(p), false);
  s.singular_values = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();

  const double scale = std::max(1.0, s.singular_values.size() > 0 ? s.singular_values(0) : 0.0);
  for (Eigen::Index i = 0; i < p; ++i) {
    apply_sign_convention(s.right_vectors.col(i));
    Eigen::VectorXd xv = x.entries * s.right_vectors.col(i);
    const double norm = xv.norm();
    if (norm > tolerance::rank * scale && s.singular_values(i) > tolerance::rank) {
      s.left_vectors.col(i) = xv / norm;
      s.left_defined[static_cast<std::size_t>(i)] = true;
    }
  }
  s.top_gap = p >= 2 ? s.eigenvalues(0) - s.eigenvalues(1) : 0.0;
  s.sup_norm_v = p > 0 ? s.right_vectors.col(0).cwiseAbs().maxCoeff() : 0.0;
  s.sup_norm_u = p > 0 ? s.left_vectors.col(0).cwiseAbs().maxCoeff() : 0.0;
  return s;
}

/// Eigenvalues of X^T X only, descending.
[[nodiscard]] inline Eigen::VectorXd eigenvalues_only(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  h.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

[[nodiscard]] inline double top_eigenvalue(const Eigen::MatrixXd& x) {
  if (x.cols() == 1) return x.squaredNorm();
  return eigenvalues_only(x)(0);
}

struct TopPair {
  double lambda = 0.0;
  Eigen::VectorXd v;
  Eigen::VectorXd u;
  double residual = 0.0;
  std::size_t iterations = 0;  // Lanczos steps (excludes residual checks)
};

/// Top eigenpair of H = X^T X by Lanczos with full reorthogonalisation
/// and restarts from the current Ritz vector. H is applied implicitly as
/// X^T (X q). `max_iter` bounds the number of H-products.
inline TopPair top_pair_iterative(const DataMatrix& x, double tol, std::size_t max_iter) {
  const Eigen::Index p = x.entries.cols();
  if (p == 0) throw ShapeError("matrix has no columns");
  const Eigen::Index basis_limit = std::min<Eigen::Index>(p, 64);
  auto apply_h = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    return x.entries.transpose() * (x.entries * q);
  };

  // Fixed-seed start vector keeps the solver deterministic.
  RngStream start(0x5eed5eed5eedULL, Purpose::iterative_start, static_cast<std::uint64_t>(p));
  Eigen::VectorXd q(p);
  for (Eigen::Index i = 0; i < p; ++i) q(i) = start.normal();
  q.normalize();

  TopPair result;
  double last_residual = std::numeric_limits<double>::infinity();
  std::size_t products = 0;
  std::size_t steps = 0;

  while (products < max_iter) {
    Eigen::MatrixXd basis(p, basis_limit);
    std::vector<double> alpha;
    std::vector<double> beta;
    basis.col(0) = q;
    Eigen::VectorXd ritz;
    double theta = 0.0;

    for (Eigen::Index j = 0; j < basis_limit && products < max_iter; ++j) {
      Eigen::VectorXd w = apply_h(basis.col(j));
      ++products;
      ++steps;
      alpha.push_back(basis.col(j).dot(w));
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass)
        w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
      const double b = w.norm();

      const Eigen::Index m = j + 1;
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index i = 0; i < m; ++i) t(i, i) = alpha[static_cast<std::size_t>(i)];
      for (Eigen::Index i = 0; i + 1 < m; ++i)
        t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
      theta = small.eigenvalues()(m - 1);
      const Eigen::VectorXd s = small.eigenvectors().col(m - 1);
      const double estimate = b * std::abs(s(m - 1));
      const bool invariant = b <= 1e-14 * std::max(1.0, std::abs(theta));

      if (estimate <= tol || invariant || j + 1 == basis_limit || products >= max_iter) {
        ritz = basis.leftCols(m) * s;
        ritz.normalize();
        break;
      }
      beta.push_back(b);
      basis.col(j + 1) = w / b;
    }

    const Eigen::VectorXd hv = apply_h(ritz);
    ++products;
    const double rayleigh = ritz.dot(hv);
    last_residual = (hv - rayleigh * ritz).norm();
    if (last_residual <= tol) {
      result.lambda = rayleigh;
      result.v = ritz;
      apply_sign_convention(result.v);
      const Eigen::VectorXd xv = x.entries * result.v;
      const double norm = xv.norm();
      result.u = norm > 0.0 ? Eigen::VectorXd(xv / norm) : Eigen::VectorXd::Zero(x.entries.rows());
      result.residual = last_residual;
      result.iterations = steps;
      return result;
    }
    q = ritz;
  }
  throw IterationLimitError("Lanczos did not reach residual " + std::to_string(tol) + " in " +
                                std::to_string(max_iter) + " products (last residual " +
                                std::to_string(last_residual) + ")",
                            last_residual);
}

/// max_i |X~ w_i - sqrt(lambda_i) w_i|_2 over defined singular triplets,
/// with w_i = (u_i; v_i) and X~ = [[0, X], [X^T, 0]].
[[nodiscard]] inline double symmetrize_check(const DataMatrix& x, const SpectralSummary& s) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.right_vectors.cols(); ++i) {
    if (!s.left_defined[static_cast<std::size_t>(i)]) continue;
    const double sigma = s.singular_values(i);
    const Eigen::VectorXd top = x.entries * s.right_vectors.col(i) - sigma * s.left_vectors.col(i);
    const Eigen::VectorXd bottom =
        x.entries.transpose() * s.left_vectors.col(i) - sigma * s.right_vectors.col(i);
    worst = std::max(worst, std::sqrt(top.squaredNorm() + bottom.squaredNorm()));
  }
  return worst;
}

struct Gap {
  std::size_t index;  // 1-based i of lambda_i - lambda_{i+1}
  double value;
};

[[nodiscard]] inline std::vector<Gap> gap_stats(const SpectralSummary& s) {
  const auto p = static_cast<std::size_t>(s.eigenvalues.size());
  if (p < 2) throw ShapeError("gap statistics need at least two eigenvalues");
  std::vector<Gap> gaps;
  gaps.reserve(p - 1);
  for (std::size_t i = 0; i + 1 < p; ++i)
    gaps.push_back({i + 1, s.eigenvalues(static_cast<Eigen::Index>(i)) -
                               s.eigenvalues(static_cast<Eigen::Index>(i + 1))});
  return gaps;
}

struct Delocalization {
  double right_max_scaled = 0.0;  // max_m sqrt(p) |v_m|_inf
  double left_top_scaled = 0.0;   // sqrt(n) |u_1|_inf
};

[[nodiscard]] inline Delocalization deloc_stats(const SpectralSummary& s) {
  Delocalization d;
  for (Eigen::Index m = 0; m < s.right_vectors.cols(); ++m)
    d.right_max_scaled = std::max(d.right_max_scaled, scaled_sup_norm(s.right_vectors.col(m)));
  if (s.left_vectors.cols() > 0) d.left_top_scaled = scaled_sup_norm(s.left_vectors.col(0));
  return d;
}

}  // namespace rspca
