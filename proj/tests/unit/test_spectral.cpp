#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rspca/ensemble.hpp"
#include "rspca/spectral.hpp"
#include "rspca/stats.hpp"

using namespace rspca;

namespace {

DataMatrix gaussian(std::size_t n, std::size_t p, std::uint64_t seed) {
  RngStream s(seed);
  return sample_matrix({n, p, EntryLaw::gaussian, seed}, s);
}

DataMatrix raw(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(rows.begin()->size());
  Eigen::MatrixXd m(n, p);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return DataMatrix::from_entries(m);
}

void expect_summary_invariants(const DataMatrix& x, const SpectralSummary& s) {
  const Eigen::MatrixXd h = x.entries.transpose() * x.entries;
  const double l1 = s.top_eigenvalue();
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    EXPECT_LE((h * s.right_vectors.col(i) - s.eigenvalues(i) * s.right_vectors.col(i)).norm(),
              tolerance::eig(l1) * (1 + l1));
    if (i > 0) EXPECT_GE(s.eigenvalues(i - 1), s.eigenvalues(i));
  }
  const auto p = s.right_vectors.cols();
  EXPECT_LE((s.right_vectors.transpose() * s.right_vectors - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff(),
            tolerance::orth);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!s.left_defined[static_cast<std::size_t>(i)]) continue;
    EXPECT_NEAR(s.left_vectors.col(i).norm(), 1.0, tolerance::orth);
    EXPECT_LE((x.entries * s.right_vectors.col(i) - s.singular_values(i) * s.left_vectors.col(i)).norm(),
              tolerance::eig(l1) * (1 + l1));
  }
}

}  // namespace

TEST(Decompose, SingleNonzeroColumn) {
  const auto x = raw({{1, 0}, {0, 0}});
  const auto s = decompose(x);
  EXPECT_DOUBLE_EQ(s.eigenvalues(0), 1.0);
  EXPECT_DOUBLE_EQ(s.eigenvalues(1), 0.0);
  EXPECT_NEAR(s.right_vectors(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(s.left_vectors(0, 0), 1.0, 1e-15);
  EXPECT_TRUE(s.left_defined[0]);
  EXPECT_FALSE(s.left_defined[1]);  // zero singular value is flagged, not fabricated
  EXPECT_EQ(s.left_vectors.col(1).norm(), 0.0);
}

TEST(Decompose, DegenerateIdentityGram) {
  const auto x = raw({{0, 1}, {1, 0}});
  const auto s = decompose(x);
  EXPECT_NEAR(s.eigenvalues(0), 1.0, 1e-15);
  EXPECT_NEAR(s.eigenvalues(1), 1.0, 1e-15);
  EXPECT_FALSE(s.top_is_simple());
  expect_summary_invariants(x, s);
}

TEST(Decompose, EigenvaluesMatchJacobiSvd) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = gaussian(6, 4, seed);
    const auto s = decompose(x);
    const Eigen::VectorXd oracle_ev = oracle::svd_eigenvalues(x.entries);
    EXPECT_LE((s.eigenvalues - oracle_ev).cwiseAbs().maxCoeff(), 1e-10);
    expect_summary_invariants(x, s);
  }
}

TEST(Decompose, InvariantsOnRandomInstances) {
  for (auto [n, p] : {std::pair{50, 30}, {80, 80}, {120, 7}}) {
    const auto x = gaussian(n, p, n * 31 + p);
    expect_summary_invariants(x, decompose(x));
  }
}

TEST(Decompose, BitStableAndSignConventionIdempotent) {
  const auto x = gaussian(40, 25, 9);
  const auto a = decompose(x);
  const auto b = decompose(x);
  EXPECT_TRUE(a.eigenvalues == b.eigenvalues);
  EXPECT_TRUE(a.right_vectors == b.right_vectors);
  EXPECT_TRUE(a.left_vectors == b.left_vectors);
  for (Eigen::Index i = 0; i < a.right_vectors.cols(); ++i) {
    Eigen::VectorXd v = a.right_vectors.col(i);
    apply_sign_convention(v);
    EXPECT_TRUE(v == a.right_vectors.col(i));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(v(arg), 0.0);
  }
}

TEST(SignConvention, TieGoesToLowestIndex) {
  Eigen::VectorXd v(3);
  v << -0.5, 0.5, 0.1;
  apply_sign_convention(v);
  EXPECT_GT(v(0), 0.0);
}

TEST(Decompose, NonzeroSpectraOfBothGramsAgree) {
  const auto x = gaussian(30, 12, 4);
  const auto s = decompose(x);
  const Eigen::MatrixXd ht = x.entries * x.entries.transpose();
  Eigen::VectorXd big = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ht).eigenvalues().reverse();
  EXPECT_LE((big.head(12) - s.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(big.tail(18).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Symmetrization, PlusMinusPairsAndZeros) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = gaussian(5, 3, seed);
    const auto s = decompose(x);
    Eigen::VectorXd ev = oracle::symmetrization_eigenvalues(x.entries);  // ascending, 8 values
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(ev(7 - i), s.singular_values(i), 1e-12);
      EXPECT_NEAR(ev(i), -s.singular_values(i), 1e-12);
    }
    EXPECT_LE(ev.segment(3, 2).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SymmetrizeCheck, ResidualSmall) {
  for (std::size_t n : {20, 100, 300}) {
    const auto x = gaussian(n, n, n);
    EXPECT_LE(symmetrize_check(x, decompose(x)), 1e-9);
  }
  const auto zero = DataMatrix::from_entries(Eigen::MatrixXd::Zero(4, 3));
  EXPECT_EQ(symmetrize_check(zero, decompose(zero)), 0.0);
  Eigen::MatrixXd e11 = Eigen::MatrixXd::Zero(4, 3);
  e11(0, 0) = 1.0;
  const auto single = DataMatrix::from_entries(e11);
  const auto s = decompose(single);
  EXPECT_EQ(symmetrize_check(single, s), 0.0);
  EXPECT_NEAR(s.left_vectors.col(0).squaredNorm() + s.right_vectors.col(0).squaredNorm(), 2.0, 1e-15);
}

TEST(TopPairIterative, RankOneConvergesImmediately) {
  Eigen::VectorXd a(5), b(4);
  a << 1, 2, -1, 0.5, 3;
  b << 0.3, -1, 2, 1;
  const auto x = DataMatrix::from_entries(a * b.transpose());
  const auto t = top_pair_iterative(x, 1e-10, 50);
  EXPECT_NEAR(t.lambda, a.squaredNorm() * b.squaredNorm(), 1e-9);
  EXPECT_LE(t.iterations, 2u);
  EXPECT_NEAR(std::abs(t.v.dot(b.normalized())), 1.0, 1e-12);
}

TEST(TopPairIterative, MatchesDenseOnGaussianSample) {
  const auto x = gaussian(200, 200, 17);
  const auto s = decompose(x);
  const auto t = top_pair_iterative(x, 1e-10, 5000);
  EXPECT_NEAR(t.lambda, s.top_eigenvalue(), 1e-8);
  EXPECT_LE(t.residual, 1e-10);
  // Same sign convention, so the vectors agree directly.
  EXPECT_LE((t.v - s.top_right()).norm(), 1e-4);
}

TEST(TopPairIterative, DegenerateInputFailsOrReturnsValidVector) {
  const auto x = DataMatrix::from_entries(Eigen::MatrixXd::Identity(6, 6));
  try {
    const auto t = top_pair_iterative(x, 1e-10, 20);
    EXPECT_LE(t.residual, 1e-10);
    EXPECT_NEAR(t.v.norm(), 1.0, 1e-12);
  } catch (const IterationLimitError& e) {
    EXPECT_GE(e.last_residual(), 0.0);
  }
}

TEST(TopPairIterative, IterationLimitCarriesResidual) {
  const auto x = gaussian(200, 200, 3);
  try {
    (void)top_pair_iterative(x, 1e-14, 3);
    FAIL() << "expected an iteration-limit error";
  } catch (const IterationLimitError& e) {
    EXPECT_GT(e.last_residual(), 0.0);
  }
}

TEST(GapStats, ValuesAndErrors) {
  SpectralSummary s;
  s.eigenvalues = Eigen::Vector3d(3, 1, 0);
  const auto g = gap_stats(s);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].index, 1u);
  EXPECT_DOUBLE_EQ(g[0].value, 2.0);
  EXPECT_DOUBLE_EQ(g[1].value, 1.0);
  const auto ident = decompose(DataMatrix::from_entries(Eigen::MatrixXd::Identity(4, 4)));
  for (const auto& gap : gap_stats(ident)) EXPECT_NEAR(gap.value, 0.0, 1e-14);
  SpectralSummary one;
  one.eigenvalues = Eigen::VectorXd::Ones(1);
  EXPECT_THROW(gap_stats(one), ShapeError);
}

TEST(GapStats, TopGapOnEdgeScale) {
  // Median of n^{2/3} (lambda_1 - lambda_2) is order one.
  std::vector<double> scaled;
  const std::size_t n = 100;
  for (std::uint64_t r = 0; r < 60; ++r) {
    RngStream s(5, Purpose::matrix, r);
    const auto ev = eigenvalues_only(sample_matrix({n, n, EntryLaw::gaussian, 5}, s).entries);
    scaled.push_back(std::pow(static_cast<double>(n), 2.0 / 3.0) * (ev(0) - ev(1)));
  }
  const double med = stats::median(scaled);
  EXPECT_GE(med, 0.1);
  EXPECT_LE(med, 10.0);
}

TEST(Deloc, ExtremesAndScaling) {
  SpectralSummary s;
  s.right_vectors = Eigen::MatrixXd::Identity(16, 16);
  s.left_vectors = Eigen::MatrixXd::Zero(16, 16);
  EXPECT_DOUBLE_EQ(deloc_stats(s).right_max_scaled, 4.0);
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(16, 0.25);
  EXPECT_DOUBLE_EQ(scaled_sup_norm(flat), 1.0);
}

TEST(Variational, RayleighQuotientBelowTopEigenvalue) {
  const auto x = gaussian(40, 30, 12);
  const auto s = decompose(x);
  const Eigen::MatrixXd h = x.entries.transpose() * x.entries;
  RngStream r(4);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd q(30);
    for (int i = 0; i < 30; ++i) q(i) = r.normal();
    q.normalize();
    EXPECT_LE(q.dot(h * q), s.top_eigenvalue() + tolerance::eig(s.top_eigenvalue()));
  }
}
