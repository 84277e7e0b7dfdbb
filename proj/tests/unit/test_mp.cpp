#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rspca/mp.hpp"
#include "rspca/rng.hpp"

using namespace rspca;

namespace {

// 10 x 10 grid over the spectral domain, eta spread log-uniformly.
std::vector<SpectralParameter> domain_grid(const MPModel& model, std::size_t ne, std::size_t nh,
                                           double eta_min) {
  const double e_lo = model.xi() < 1.0 ? 0.5 * model.lambda_minus() : 0.1;
  const double e_hi = model.lambda_plus() + 1.0;
  std::vector<SpectralParameter> grid;
  for (std::size_t i = 0; i < ne; ++i)
    for (std::size_t j = 0; j < nh; ++j) {
      const double E = e_lo + (e_hi - e_lo) * static_cast<double>(i) / static_cast<double>(ne - 1);
      const double t = static_cast<double>(j) / static_cast<double>(nh - 1);
      const double eta = eta_min * std::pow(2.9 / eta_min, t);
      grid.push_back({E, eta});
    }
  return grid;
}

}  // namespace

TEST(MpEdges, ClosedFormValues) {
  auto e1 = mp_edges(1.0);
  EXPECT_EQ(e1.lower, 0.0);
  EXPECT_EQ(e1.upper, 4.0);
  auto e25 = mp_edges(0.25);
  EXPECT_DOUBLE_EQ(e25.lower, 0.25);
  EXPECT_DOUBLE_EQ(e25.upper, 2.25);
  auto e5 = mp_edges(0.5);
  EXPECT_NEAR(e5.lower, 0.0857864376269, 1e-12);
  EXPECT_NEAR(e5.upper, 2.9142135623731, 1e-12);
  EXPECT_THROW((void)mp_edges(0.0), DomainError);
  EXPECT_THROW((void)mp_edges(1.5), DomainError);
}

TEST(MpDensity, PointValuesAndSupport) {
  const MPModel m1(1.0);
  EXPECT_NEAR(mp_density(m1, 1.0), std::sqrt(3.0) / (2 * std::numbers::pi), 1e-14);
  EXPECT_EQ(mp_density(m1, 4.5), 0.0);
  EXPECT_EQ(mp_density(m1, -1.0), 0.0);
  const MPModel m(0.5);
  EXPECT_EQ(mp_density(m, 0.01), 0.0);
  EXPECT_EQ(mp_density(m, 3.0), 0.0);
}

TEST(MpDensity, SoftEdgesVanish) {
  for (double xi : {0.25, 0.5, 0.75}) {
    const MPModel m(xi);
    // Square-root vanishing: quadrupling the distance doubles the density.
    const double lp = m.lambda_plus(), lm = m.lambda_minus();
    EXPECT_NEAR(mp_density(m, lp - 4e-12) / mp_density(m, lp - 1e-12), 2.0, 1e-3);
    EXPECT_NEAR(mp_density(m, lm + 4e-12) / mp_density(m, lm + 1e-12), 2.0, 1e-3);
    EXPECT_LE(mp_density(m, lp - 1e-12), 1e-6);
    EXPECT_LE(mp_density(m, lm + 1e-12), 1e-4);
  }
}

TEST(MpDensity, MassAndFirstMoment) {
  for (double xi : {0.25, 0.5, 0.75, 1.0}) {
    const MPModel m(xi);
    EXPECT_NEAR(integrate_against_density(m, [](double) { return 1.0; }), 1.0, 1e-8) << xi;
    EXPECT_NEAR(integrate_against_density(m, [](double x) { return x; }), 1.0, 1e-6) << xi;
    // Independent quadrature in x, and the second moment 1 + xi.
    EXPECT_NEAR(oracle::mp_integral(xi, [](double) { return 1.0; }), 1.0, 1e-8) << xi;
    EXPECT_NEAR(integrate_against_density(m, [](double x) { return x * x; }), 1.0 + xi, 1e-8) << xi;
  }
}

TEST(MpStieltjes, PositiveImaginaryPartOnDomain) {
  for (double xi : {0.25, 0.5, 2.0 / 3.0, 1.0}) {
    const MPModel m(xi);
    for (const auto& z : domain_grid(m, 10, 10, 1e-3)) {
      EXPECT_GT(mp_stieltjes(m, z).imag(), 0.0) << xi << " " << z.E << " " << z.eta;
    }
  }
}

TEST(MpStieltjes, MatchesQuadratureOracle) {
  for (double xi : {0.25, 0.5, 1.0}) {
    const MPModel m(xi);
    for (const auto& z : domain_grid(m, 10, 10, 0.01)) {
      const complex closed = mp_stieltjes(m, z);
      const complex quad = oracle::stieltjes_by_quadrature(xi, z.z());
      EXPECT_LE(std::abs(closed - quad), 1e-6) << xi << " " << z.E << " " << z.eta;
    }
  }
}

TEST(MpStieltjes, RandomPointsAgreeWithQuadrature) {
  RngStream s(31);
  for (int t = 0; t < 50; ++t) {
    const double xi = 0.1 + 0.9 * s.uniform();
    const MPModel m(xi);
    const SpectralParameter z{-1.0 + 6.0 * s.uniform(), 0.01 + 2.0 * s.uniform()};
    EXPECT_LE(std::abs(mp_stieltjes(m, z) - oracle::stieltjes_by_quadrature(xi, z.z())), 1e-6);
  }
}

TEST(MpStieltjes, GoldenRatioAtMinusOne) {
  const MPModel m(1.0);
  const complex v = mp_stieltjes(m, {-1.0, 0.0});
  EXPECT_NEAR(v.real(), (std::sqrt(5.0) - 1) / 2, 1e-12);
  EXPECT_EQ(v.imag(), 0.0);
  const double quad = oracle::mp_integral(1.0, [](double x) { return 1.0 / (x + 1.0); });
  EXPECT_NEAR(v.real(), quad, 1e-8);
}

TEST(MpStieltjes, DecaysLikeMinusOneOverZ) {
  for (double xi : {0.3, 1.0}) {
    const MPModel m(xi);
    for (double E : {1e6, -1e6}) {
      const complex v = mp_stieltjes(m, {E, 0.0});
      EXPECT_LE(std::abs(v + 1.0 / E), 1e-9);
      // The next term of the expansion, -mean/z^2 with mean 1.
      EXPECT_NEAR((v + 1.0 / E).real(), -1.0 / (E * E), 1e-15);
    }
  }
}

TEST(MpStieltjes, RejectsBoundaryValueOnSupport) {
  const MPModel m(0.5);
  EXPECT_THROW((void)mp_stieltjes(m, {1.0, 0.0}), DomainError);
  EXPECT_THROW((void)mp_stieltjes(m, {1.0, -0.1}), DomainError);
  EXPECT_NO_THROW((void)mp_stieltjes(m, {5.0, 0.0}));
}

TEST(MpStieltjes, SatisfiesSelfConsistentEquation) {
  // xi z m^2 + (z + xi - 1) m + 1 = 0 for the law of X^T X with 1/n scaling.
  for (double xi : {0.2, 0.7, 1.0}) {
    const MPModel m(xi);
    for (const auto& zp : domain_grid(m, 7, 7, 1e-4)) {
      const complex z = zp.z();
      const complex v = mp_stieltjes(m, zp);
      EXPECT_LE(std::abs(xi * z * v * v + (z + xi - 1.0) * v + 1.0), 1e-10);
    }
  }
}

TEST(MpQuantiles, OrderingAndInversion) {
  const MPModel m(0.5);
  const std::size_t N = 200;
  const auto g = mp_quantiles(m, N);
  for (std::size_t k = 1; k < N; ++k) EXPECT_GT(g[k - 1], g[k]);
  for (std::size_t k = 1; k <= N; k += 13) {
    EXPECT_NEAR(upper_tail_mass(m, g[k - 1]), (k - 0.5) / N, 1e-9);
    EXPECT_NEAR(oracle::mp_upper_mass(0.5, g[k - 1]), (k - 0.5) / N, 1e-8);
  }
}

TEST(MpQuantiles, TopQuantileApproachesEdge) {
  const MPModel m(0.5);
  EXPECT_NEAR(mp_quantiles(m, 1000).front(), m.lambda_plus(), 0.05);
  EXPECT_GT(mp_quantiles(m, 1000).front(), mp_quantiles(m, 10).front());
}

TEST(MpQuantiles, SquareCaseTwoPointsAverageToMean) {
  const MPModel m(1.0);
  const auto g = mp_quantiles(m, 2);
  // The 25% / 75% upper-mass points of the square law, by an independent
  // inversion of the x-space CDF.
  auto upper_mass = [](double t) { return oracle::mp_upper_mass(1.0, t); };
  for (int k = 0; k < 2; ++k) {
    double lo = 0.0, hi = 4.0;
    const double target = k == 0 ? 0.25 : 0.75;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (upper_mass(mid) > target ? lo : hi) = mid;
    }
    EXPECT_NEAR(g[k], 0.5 * (lo + hi), 1e-8);
  }
  EXPECT_NEAR(g[0] + g[1], 2.0, 0.6);
}

TEST(Kappa, DistanceToNearestEdge) {
  const MPModel m(0.25);
  EXPECT_DOUBLE_EQ(SpectralParameter({2.0, 0.1}).kappa(m), 0.25);
  EXPECT_DOUBLE_EQ(SpectralParameter({0.3, 0.1}).kappa(m), 0.3 - 0.25);
  EXPECT_GE(SpectralParameter({5.0, 0.0}).kappa(m), 0.0);
}

TEST(ImEnvelope, EdgeBranches) {
  const MPModel m(1.0);
  const auto at_edge = im_m_edge_estimate(m, {4.0, 1e-6});
  const auto at_edge4 = im_m_edge_estimate(m, {4.0, 4e-6});
  EXPECT_NEAR(at_edge4.shape / at_edge.shape, 2.0, 1e-6);  // proportional to sqrt(eta)
  const auto outside = im_m_edge_estimate(m, {4.1, 1e-6});
  const auto outside2 = im_m_edge_estimate(m, {4.1, 2e-6});
  EXPECT_NEAR(outside2.shape / outside.shape, 2.0, 1e-4);  // proportional to eta
  EXPECT_LT(outside.shape, 1e-5);
  EXPECT_THROW((void)im_m_edge_estimate(m, {6.0, 0.1}), DomainError);
  EXPECT_THROW((void)im_m_edge_estimate(m, {2.0, 3.5}), DomainError);
}

TEST(ImEnvelope, ContainsClosedFormOnGrid) {
  for (double xi : {0.25, 0.5, 2.0 / 3.0, 1.0}) {
    const MPModel m(xi);
    for (const auto& z : domain_grid(m, 20, 10, 1e-4)) {
      const double im = mp_stieltjes(m, z).imag();
      EXPECT_TRUE(im_m_edge_estimate(m, z).contains(im)) << xi << " " << z.E << " " << z.eta << " " << im;
    }
  }
}
