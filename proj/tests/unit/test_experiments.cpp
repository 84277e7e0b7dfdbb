#include <gtest/gtest.h>

#include <cmath>

#include "rspca/experiments.hpp"

using namespace rspca;

namespace {

SpectralSummary summary_of(const EnsembleConfig& cfg, std::uint64_t index) {
  RngStream s(cfg.base_seed, Purpose::matrix, index);
  return decompose(sample_matrix(cfg, s));
}

}  // namespace

TEST(Overlap, IdenticalMatricesGiveExactValues) {
  const EnsembleConfig cfg{30, 20, EntryLaw::gaussian, 3};
  RngStream ms(1), fs(2);
  const auto pair = apply_plan(sample_matrix(cfg, ms), ResamplePlan{30, 20, {}}, fs);
  const auto o = overlap_stats(pair);
  EXPECT_EQ(o.inner_v, 1.0);
  EXPECT_EQ(o.inner_u, 1.0);
  EXPECT_EQ(o.sup_dist, 0.0);
  EXPECT_EQ(o.l2_dist, 0.0);
}

TEST(Overlap, DistanceAndInnerProductIdentity) {
  const EnsembleConfig cfg{40, 25, EntryLaw::rademacher, 4};
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto a = summary_of(cfg, r);
    const auto b = summary_of(cfg, r + 100);
    const auto o = overlap_between(a, b);
    // |v - s w|^2 = 2 - 2 |<v, w>| for unit vectors and the aligning sign.
    EXPECT_NEAR(o.l2_dist * o.l2_dist, 2.0 - 2.0 * o.inner_v, 1e-12);
    EXPECT_LE(o.inner_v, 1.0 + 1e-12);
    EXPECT_LE(o.sup_dist, std::sqrt(40.0) * o.l2_dist + 1e-12);
  }
}

TEST(Overlap, SymmetricInItsArguments) {
  const EnsembleConfig cfg{30, 30, EntryLaw::gaussian, 8};
  const auto a = summary_of(cfg, 1);
  const auto b = summary_of(cfg, 2);
  const auto ab = overlap_between(a, b);
  const auto ba = overlap_between(b, a);
  EXPECT_DOUBLE_EQ(ab.inner_v, ba.inner_v);
  EXPECT_DOUBLE_EQ(ab.inner_u, ba.inner_u);
  EXPECT_DOUBLE_EQ(ab.sup_dist, ba.sup_dist);
  EXPECT_DOUBLE_EQ(ab.l2_dist, ba.l2_dist);
}

TEST(Sweep, ResampleCountClampsAndRounds) {
  EXPECT_EQ(resample_count(100, 50, 1.0), 100u);
  EXPECT_EQ(resample_count(100, 50, 0.5), 10u);
  EXPECT_EQ(resample_count(100, 50, 2.0), 5000u);
  EXPECT_EQ(resample_count(10, 3, 2.0), 30u);
}

TEST(Sweep, DeterministicAndThreadIndependent) {
  const EnsembleConfig cfg{30, 15, EntryLaw::gaussian, 12};
  const std::vector<double> alphas{0.5, 1.5};
  const auto a = threshold_sweep(cfg, alphas, 6, 1);
  const auto b = threshold_sweep(cfg, alphas, 6, 3);
  ASSERT_EQ(a.cells.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    ASSERT_EQ(a.cells[c].replicas.size(), 6u);
    for (std::size_t r = 0; r < 6; ++r) {
      EXPECT_EQ(a.cells[c].replicas[r].stats.inner_v, b.cells[c].replicas[r].stats.inner_v);
      EXPECT_EQ(a.cells[c].replicas[r].stats.sup_dist, b.cells[c].replicas[r].stats.sup_dist);
    }
    EXPECT_EQ(a.cells[c].valid + a.cells[c].excluded, 6u);
    EXPECT_FALSE(a.cells[c].reliable);  // fewer than the reliability floor
  }
}

TEST(Sweep, SmallAndLargeResamplingSeparate) {
  const EnsembleConfig cfg{60, 60, EntryLaw::gaussian, 5};
  const std::vector<double> alphas{0.3, 2.0};
  const auto sweep = threshold_sweep(cfg, alphas, 10, 1);
  EXPECT_GT(sweep.cells[0].inner_v.mean, 0.9);
  EXPECT_LT(sweep.cells[1].inner_v.mean, 0.5);
  EXPECT_TRUE(monotone_violations(sweep).empty());
}

TEST(Sweep, RejectsBadInputs) {
  const EnsembleConfig cfg{10, 5, EntryLaw::gaussian, 1};
  const std::vector<double> bad{2.5};
  EXPECT_THROW(threshold_sweep(cfg, bad, 2), RangeError);
  const std::vector<double> good{1.0};
  EXPECT_THROW(threshold_sweep(cfg, good, 0), RangeError);
  EXPECT_THROW(overlap_cell(cfg, 0, 51, 1.0, 2), RangeError);
}

TEST(Sweep, MonotoneViolationFlagsRise) {
  SweepResult sweep;
  for (double m : {0.9, 0.2, 0.8}) {
    SweepCell c;
    c.inner_v.mean = m;
    c.inner_v.std_error = 0.01;
    sweep.cells.push_back(c);
  }
  const auto v = monotone_violations(sweep);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].cell, 1u);
  EXPECT_NEAR(v[0].increase, 0.6, 1e-12);
}

TEST(VarianceFormula, LinearStatisticIsExactPerTerm) {
  // For f = sum of entries each term is (x - x')^2 / 2 and Var f = np / n = p.
  const EnsembleConfig cfg{6, 4, EntryLaw::gaussian, 9};
  const auto est = chatterjee_variance(cfg, Statistic::entry_sum, 400, {}, 1);
  EXPECT_NEAR(est.var_formula.value, 4.0, 4 * est.var_formula.std_error);
  EXPECT_NEAR(est.var_empirical.value, 4.0, 4 * est.var_empirical.std_error);
}

TEST(VarianceFormula, BkValuesAndBounds) {
  const EnsembleConfig cfg{5, 4, EntryLaw::gaussian, 2};
  const std::vector<std::size_t> ks{1, 20};
  const auto est = chatterjee_variance(cfg, Statistic::entry_sum, 300, ks, 1);
  ASSERT_EQ(est.bk_values.size(), 2u);
  // Linear f with an empty prefix: E (x - x')(x - x'') = E x^2 = 1/n.
  EXPECT_NEAR(est.bk_values[0].bk.value, 0.2, 4 * est.bk_values[0].bk.std_error);
  // With the prefix at 19 of 20 entries: (1/n)(1 - 19/20) - (1/n)(19/20) = -0.18.
  EXPECT_NEAR(est.bk_values[1].bk.value, -0.18, 4 * est.bk_values[1].bk.std_error);
  for (const auto& b : est.bk_values) {
    EXPECT_NEAR(b.bound, 2.0 * est.var_empirical.value / b.k * 21.0 / 20.0, 1e-12);
  }
}

TEST(VarianceFormula, RejectsBadInputs) {
  const EnsembleConfig big{200, 100, EntryLaw::gaussian, 1};
  EXPECT_THROW(chatterjee_variance(big, Statistic::entry_sum, 10), RangeError);
  const EnsembleConfig cfg{4, 2, EntryLaw::gaussian, 1};
  EXPECT_THROW(chatterjee_variance(cfg, Statistic::entry_sum, 1), RangeError);
  const std::vector<std::size_t> ks{9};
  EXPECT_THROW(chatterjee_variance(cfg, Statistic::entry_sum, 4, ks), RangeError);
  EXPECT_THROW((void)parse_statistic("trace"), ConfigError);
  EXPECT_EQ(parse_statistic("lambda1"), Statistic::top_eigenvalue);
}

TEST(VarianceFormula, ThreadIndependent) {
  const EnsembleConfig cfg{5, 3, EntryLaw::rademacher, 7};
  const std::vector<std::size_t> ks{3};
  const auto a = chatterjee_variance(cfg, Statistic::top_eigenvalue, 20, ks, 1);
  const auto b = chatterjee_variance(cfg, Statistic::top_eigenvalue, 20, ks, 4);
  EXPECT_EQ(a.var_formula.value, b.var_formula.value);
  EXPECT_EQ(a.var_empirical.value, b.var_empirical.value);
  EXPECT_EQ(a.bk_values[0].bk.value, b.bk_values[0].bk.value);
}

TEST(SingleEntry, ShiftsAreSmallOnTheirScale) {
  const EnsembleConfig cfg{60, 60, EntryLaw::gaussian, 4};
  const auto rep = single_entry_study(cfg, 40, 1);
  EXPECT_EQ(rep.records.size(), 40u);
  EXPECT_DOUBLE_EQ(rep.eigenvalue_scale, std::pow(60.0, -1.5));
  EXPECT_LE(rep.median_shift, 20 * rep.eigenvalue_scale);
  EXPECT_GT(rep.max_shift, 0.0);
  EXPECT_THROW(single_entry_study(cfg, 3601), RangeError);
}

TEST(Stability, ZeroResamplingHasNoShift) {
  const EnsembleConfig cfg{40, 40, EntryLaw::gaussian, 6};
  const auto rep = stability_study(cfg, 0, 4, 1);
  for (const auto& r : rep.records) {
    EXPECT_EQ(r.eigenvalue_shift, 0.0);
    if (r.gap_ok) EXPECT_GE(r.reconstruction_quality, 0.9);
  }
  EXPECT_THROW(stability_study(cfg, 0, 0), RangeError);
}

TEST(EdgeScaling, RowsAndErrors) {
  const std::vector<std::size_t> grid{10, 20, 40};
  const auto rep = edge_scaling_study(1.0, grid, 6, EntryLaw::gaussian, 3, 1);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_EQ(rep.rows[2].p, 40u);
  EXPECT_DOUBLE_EQ(rep.rows[0].lambda_plus, 4.0);
  const std::vector<std::size_t> short_grid{10, 20};
  EXPECT_THROW(edge_scaling_study(1.0, short_grid, 6, EntryLaw::gaussian, 3), RangeError);
  const std::vector<std::size_t> unsorted{20, 10, 40};
  EXPECT_THROW(edge_scaling_study(1.0, unsorted, 6, EntryLaw::gaussian, 3), RangeError);
  EXPECT_THROW(edge_scaling_study(1.0, grid, 3, EntryLaw::gaussian, 3), RangeError);
}

TEST(LocalLaw, RecordsAreZMajor) {
  const EnsembleConfig cfg{30, 15, EntryLaw::gaussian, 2};
  const std::vector<SpectralParameter> zs{{1.0, 0.5}, {2.0, 0.2}};
  const auto rep = local_law_study(cfg, zs, 3, 0.0, 1);
  ASSERT_EQ(rep.records.size(), 6u);
  EXPECT_EQ(rep.records[2].z_index, 0u);
  EXPECT_EQ(rep.records[3].z_index, 1u);
  EXPECT_EQ(rep.records[4].replica, 1u);
  for (const auto& r : rep.records) EXPECT_GT(r.gap.psi, 0.0);
}
