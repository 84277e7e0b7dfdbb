#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rspca/ensemble.hpp"
#include "rspca/resolvent.hpp"
#include "rspca/spectral.hpp"

using namespace rspca;

namespace {

DataMatrix gaussian(std::size_t n, std::size_t p, std::uint64_t seed) {
  RngStream s(seed);
  return sample_matrix({n, p, EntryLaw::gaussian, seed}, s);
}

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Resolvent, ZeroMatrixIsBlockDiagonal) {
  const auto x = DataMatrix::from_entries(Eigen::MatrixXd::Zero(4, 3));
  const SpectralParameter zp{1.5, 0.2};
  const auto probe = resolvent_at(x, zp, Validation::full);
  ComplexMatrix expected = ComplexMatrix::Zero(7, 7);
  expected.topLeftCorner(4, 4).diagonal().setConstant(-1.0);
  expected.bottomRightCorner(3, 3).diagonal().setConstant(-1.0 / zp.z());
  EXPECT_LE(max_abs(probe.R - expected), 1e-15);
  EXPECT_LE(probe.residual, 1e-14);
}

TEST(Resolvent, MatchesDenseInverse) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto x = gaussian(6, 6, seed);
    const SpectralParameter zp{2.0, 0.5};
    const auto probe = resolvent_at(x, zp, Validation::full);
    EXPECT_LE(max_abs(probe.R - oracle::dense_block_resolvent(x.entries, zp.z())), 1e-12);
    EXPECT_LE(probe.residual, 1e-12);
  }
  const auto tall = gaussian(9, 4, 5);
  const SpectralParameter zp{0.7, 0.05};
  EXPECT_LE(max_abs(resolvent_at(tall, zp, Validation::skip).R -
                    oracle::dense_block_resolvent(tall.entries, zp.z())),
            1e-11);
}

TEST(Resolvent, FarFieldLimit) {
  const auto x = gaussian(8, 5, 2);
  const SpectralParameter zp{1e4, 1.0};
  const auto probe = resolvent_at(x, zp, Validation::skip);
  EXPECT_LE(max_abs(probe.feature_block() * zp.z() + ComplexMatrix::Identity(5, 5)), 1e-3);
  EXPECT_LE(max_abs(probe.sample_block() + ComplexMatrix::Identity(8, 8)), 1e-3);
}

TEST(Resolvent, ComplexSymmetricWithSmallResidual) {
  const auto x = gaussian(40, 25, 8);
  const auto probe = resolvent_at(x, {1.2, 0.05}, Validation::full);
  EXPECT_LE(max_abs(probe.R - probe.R.transpose()), 1e-10);
  EXPECT_LE(probe.residual, 1e-10);
}

TEST(Resolvent, FeatureBlockMatchesDirectInverse) {
  const auto x = gaussian(20, 10, 1);
  const SpectralParameter zp{0.9, 0.02};
  const ComplexMatrix direct =
      (x.entries.transpose() * x.entries - zp.z() * Eigen::MatrixXd::Identity(10, 10)).inverse();
  EXPECT_LE(max_abs(feature_resolvent(x, zp) - direct), 1e-10);
}

TEST(Resolvent, ImaginaryDiagonalPositive) {
  const auto x = gaussian(30, 20, 3);
  for (double E : {0.1, 1.0, 3.0}) {
    const auto probe = resolvent_at(x, {E, 0.01}, Validation::skip);
    for (Eigen::Index a = 0; a < 20; ++a) EXPECT_GT(probe.feature_block()(a, a).imag(), 0.0);
  }
}

TEST(DeterministicLimit, EntriesAndBound) {
  const MPModel model(0.5);
  const SpectralParameter zp{4.0, 0.1};
  const auto g = deterministic_limit(model, zp, 10, 5);
  const complex m = mp_stieltjes(model, zp);
  EXPECT_LE(std::abs(g.m - m), 1e-15);
  EXPECT_LE(std::abs(g.sample_value + 1.0 / (1.0 + m)), 1e-15);
  const auto d = g.diagonal();
  EXPECT_EQ(d.size(), 15);
  EXPECT_EQ(d(0), g.sample_value);
  EXPECT_EQ(d(14), g.m);
  EXPECT_LE(d.cwiseAbs().maxCoeff(), 10.0);
}

TEST(LocalLawGap, ZeroMatrixAgainstItsOwnLimit) {
  const auto x = DataMatrix::from_entries(Eigen::MatrixXd::Zero(3, 2));
  const SpectralParameter zp{1.0, 0.5};
  const auto probe = resolvent_at(x, zp, Validation::skip);
  const complex z = zp.z();
  // The block-diagonal inverse for X = 0 has constant diagonals -1 and -1/z.
  DeterministicLimit g{zp, 3, 2, -1.0 / z, -1.0};
  const auto gap = local_law_gap(probe, g);
  EXPECT_EQ(gap.max_offdiag, 0.0);
  EXPECT_LE(gap.max_diag_dev, 1e-15);
  DeterministicLimit wrong{zp, 4, 2, -1.0 / z, -1.0};
  EXPECT_THROW(local_law_gap(probe, wrong), ShapeError);
}

TEST(LocalLawGap, GaugeShrinksAsEtaGrows) {
  const MPModel model(1.0);
  double last = std::numeric_limits<double>::infinity();
  for (double eta : {0.01, 0.05, 0.2, 1.0}) {
    const double psi = local_law_gauge(mp_stieltjes(model, {2.0, eta}), eta, 200);
    EXPECT_LT(psi, last);
    last = psi;
  }
  EXPECT_DOUBLE_EQ(local_law_gauge({0.0, 0.25}, 0.5, 100, 0.0), std::sqrt(0.25 / 50.0) + 1.0 / 50.0);
  EXPECT_DOUBLE_EQ(local_law_gauge({0.0, 0.25}, 0.5, 100, 0.5), 10.0 * (std::sqrt(0.25 / 50.0) + 1.0 / 50.0));
}

TEST(LocalLawGap, GaussianSampleShrinksWithTheGauge) {
  const MPModel model(1.0);
  const SpectralParameter zp{2.0, 0.5};
  auto gap_at = [&](std::size_t n) {
    const auto x = gaussian(n, n, 21);
    return local_law_gap(resolvent_at(x, zp, Validation::skip), deterministic_limit(model, zp, n, n));
  };
  const auto small = gap_at(50);
  const auto large = gap_at(200);
  const double g_small = std::max(small.max_offdiag, small.max_diag_dev);
  const double g_large = std::max(large.max_offdiag, large.max_diag_dev);
  EXPECT_LT(g_large, g_small);
  // The max over ~n^2 entries carries a log factor on top of the gauge.
  EXPECT_LE(g_large, 10.0 * large.psi);
}

TEST(SpectralRep, MatchesDirectResolvent) {
  const auto x = gaussian(30, 30, 4);
  const SpectralParameter zp{1.0, 0.3};
  const auto oracle_r = spectral_rep_oracle(decompose(x), zp);
  EXPECT_LE(max_abs(oracle_r - resolvent_at(x, zp, Validation::skip).R), 1e-10);
  const auto tall = gaussian(12, 5, 6);
  EXPECT_LE(max_abs(spectral_rep_oracle(decompose(tall), zp) - oracle::dense_block_resolvent(tall.entries, zp.z())),
            1e-10);
}

TEST(SpectralRep, ZeroMatrix) {
  const auto x = DataMatrix::from_entries(Eigen::MatrixXd::Zero(4, 3));
  const SpectralParameter zp{1.0, 0.3};
  EXPECT_LE(max_abs(spectral_rep_oracle(decompose(x), zp) - resolvent_at(x, zp, Validation::skip).R), 1e-15);
}

TEST(SpectralRep, TraceOfFeatureBlockIsEmpiricalStieltjes) {
  const auto x = gaussian(25, 15, 9);
  const auto s = decompose(x);
  const SpectralParameter zp{0.8, 0.1};
  complex expected = 0.0;
  for (Eigen::Index l = 0; l < 15; ++l) expected += 1.0 / (s.eigenvalues(l) - zp.z());
  EXPECT_LE(std::abs(feature_resolvent(x, zp).trace() - expected), 1e-10);
}

TEST(Reconstruction, RankOneIsExact) {
  Eigen::VectorXd a(6), b(4);
  a << 1, -2, 0.5, 1, 0, 3;
  b << 2, 1, -1, 0.5;
  const auto x = DataMatrix::from_entries(a * b.transpose());
  const auto s = decompose(x);
  const auto rec = eigvec_reconstruct(x, s.top_eigenvalue(), 1e-4, s);
  EXPECT_TRUE(rec.validated);
  EXPECT_GE(rec.quality, 1.0 - 1e-6);
  Eigen::Index arg = 0;
  b.cwiseAbs().maxCoeff(&arg);
  EXPECT_EQ(rec.anchor, static_cast<std::size_t>(arg));
}

TEST(Reconstruction, GaussianSampleNearTopEigenvalue) {
  const auto x = gaussian(100, 100, 2);
  const auto s = decompose(x);
  ASSERT_TRUE(s.top_is_simple());
  const double eta = std::pow(100.0, -2.0 / 3.0 - 0.05) * 0.1;
  const auto rec = eigvec_reconstruct(x, s.top_eigenvalue(), eta, s);
  EXPECT_GE(rec.quality, 0.99);
  const auto self = eigvec_reconstruct(x, s.top_eigenvalue(), eta);
  EXPECT_FALSE(self.validated);
  EXPECT_GE(self.quality, 0.9);
}

TEST(Reconstruction, LargeEtaDegradesQuality) {
  const auto x = gaussian(60, 60, 7);
  const auto s = decompose(x);
  const auto sharp = eigvec_reconstruct(x, s.top_eigenvalue(), 1e-6, s);
  const auto blurred = eigvec_reconstruct(x, s.top_eigenvalue(), 10.0, s);
  EXPECT_LT(blurred.quality, sharp.quality);
  EXPECT_LT(blurred.quality, 0.99);
}

TEST(Reconstruction, InvariantUnderSignFlipOfData) {
  const auto x = gaussian(40, 30, 11);
  const auto flipped = DataMatrix::from_entries(-x.entries);
  const auto s = decompose(x);
  const auto a = eigvec_reconstruct(x, s.top_eigenvalue(), 1e-4, s);
  const auto b = eigvec_reconstruct(flipped, s.top_eigenvalue(), 1e-4, decompose(flipped));
  EXPECT_NEAR(a.quality, b.quality, 1e-12);
  EXPECT_LE((a.v_hat - b.v_hat).norm(), 1e-10);
  EXPECT_THROW(eigvec_reconstruct(x, 1.0, 0.0), DomainError);
}
