#pragma once

// Monte Carlo studies. Every study is a pure function of its configuration:
// replica r of cell c draws from streams seeded by
// mix64(base_seed, purpose, (c << 32) | r), and results are gathered in
// replica order, so the output does not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rspca/ensemble.hpp"
#include "rspca/errors.hpp"
#include "rspca/mp.hpp"
#include "rspca/parallel.hpp"
#include "rspca/resolvent.hpp"
#include "rspca/rng.hpp"
#include "rspca/spectral.hpp"
#include "rspca/stats.hpp"

namespace rspca {

// ---------------------------------------------------------------------------
// Overlaps between the top singular vectors of a coupled pair.

struct OverlapStats {
  double inner_v = 0.0;   // |<v, v^[k]>|
  double inner_u = 0.0;   // |<u, u^[k]>|
  double sup_dist = 0.0;  // min_s sqrt(n) |v - s v^[k]|_inf
  double l2_dist = 0.0;   // min_s |v - s v^[k]|_2
  bool gap_ok = true;     // both top eigenvalues simple
};

inline OverlapStats overlap_between(const SpectralSummary& a, const SpectralSummary& b) {
  if (a.p() != b.p() || a.n() != b.n()) throw ShapeError("overlap of summaries with different shapes");
  const Eigen::VectorXd v = a.right_vectors.col(0);
  const Eigen::VectorXd w = b.right_vectors.col(0);
  const double inner = v.dot(w);
  const double s = inner >= 0.0 ? 1.0 : -1.0;
  OverlapStats o;
  o.inner_v = std::abs(inner);
  o.inner_u = std::abs(a.left_vectors.col(0).dot(b.left_vectors.col(0)));
  o.l2_dist = (v - s * w).norm();
  const double sup = std::min((v - w).cwiseAbs().maxCoeff(), (v + w).cwiseAbs().maxCoeff());
  o.sup_dist = std::sqrt(static_cast<double>(a.n())) * sup;
  o.gap_ok = a.top_is_simple() && b.top_is_simple();
  return o;
}

inline OverlapStats overlap_stats(const CoupledPair& pair) {
  const SpectralSummary base = decompose(pair.base);
  if (pair.base.entries == pair.resampled.entries) {
    // Identical inputs decompose identically; report the exact values.
    return {1.0, base.left_defined[0] ? 1.0 : 0.0, 0.0, 0.0, base.top_is_simple()};
  }
  return overlap_between(base, decompose(pair.resampled));
}

// ---------------------------------------------------------------------------
// Threshold sweep over k = round(n^alpha).

inline constexpr std::size_t kMinReliableReplicas = 8;

[[nodiscard]] inline std::size_t resample_count(std::size_t n, std::size_t p, double alpha) {
  const double total = static_cast<double>(n) * static_cast<double>(p);
  const double raw = std::round(std::pow(static_cast<double>(n), alpha));
  return static_cast<std::size_t>(std::clamp(raw, 0.0, total));
}

struct ReplicaOverlap {
  std::size_t replica = 0;
  OverlapStats stats;
};

struct SweepCell {
  std::size_t index = 0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t k = 0;
  double alpha = 0.0;
  std::vector<ReplicaOverlap> replicas;  // all replicas, excluded ones flagged
  stats::Summary inner_v;
  stats::Summary inner_u;
  stats::Summary sup_dist;
  stats::Summary l2_dist;
  std::size_t valid = 0;
  std::size_t excluded = 0;
  bool reliable = false;
};

struct SweepResult {
  EnsembleConfig config;
  std::size_t replicas = 0;
  std::vector<SweepCell> cells;
};

inline ReplicaOverlap overlap_replica(const EnsembleConfig& config, std::size_t cell, std::size_t k,
                                      std::size_t replica) {
  const std::uint64_t idx = cell_replica_index(cell, replica);
  RngStream matrix_stream(config.base_seed, Purpose::matrix, idx);
  RngStream plan_stream(config.base_seed, Purpose::plan, idx);
  RngStream fresh_stream(config.base_seed, Purpose::fresh, idx);
  DataMatrix x = sample_matrix(config, matrix_stream);
  ResamplePlan plan = draw_resample_plan(config.n, config.p, k, plan_stream);
  const CoupledPair pair = apply_plan(std::move(x), std::move(plan), fresh_stream);
  return {replica, overlap_stats(pair)};
}

/// Aggregates replica records (already in replica order) into a cell.
inline SweepCell summarize_cell(std::size_t index, const EnsembleConfig& config, std::size_t k,
                                double alpha, std::vector<ReplicaOverlap> replicas) {
  SweepCell cell;
  cell.index = index;
  cell.n = config.n;
  cell.p = config.p;
  cell.k = k;
  cell.alpha = alpha;
  std::vector<double> iv, iu, sd, l2;
  for (const auto& r : replicas) {
    if (!r.stats.gap_ok) {
      ++cell.excluded;
      continue;
    }
    iv.push_back(r.stats.inner_v);
    iu.push_back(r.stats.inner_u);
    sd.push_back(r.stats.sup_dist);
    l2.push_back(r.stats.l2_dist);
  }
  cell.valid = iv.size();
  cell.reliable = cell.valid >= kMinReliableReplicas;
  cell.inner_v = stats::summarize(iv);
  cell.inner_u = stats::summarize(iu);
  cell.sup_dist = stats::summarize(sd);
  cell.l2_dist = stats::summarize(l2);
  cell.replicas = std::move(replicas);
  return cell;
}

inline SweepCell overlap_cell(const EnsembleConfig& config, std::size_t index, std::size_t k, double alpha,
                              std::size_t replicas, unsigned threads = 0) {
  config.validate();
  if (replicas == 0) throw RangeError("replica budget is 0; nothing to measure");
  if (k > config.entry_count()) throw RangeError("k exceeds np");
  auto records = run_indexed(replicas, threads,
                             [&](std::size_t r) { return overlap_replica(config, index, k, r); });
  return summarize_cell(index, config, k, alpha, std::move(records));
}

inline void validate_alphas(std::span<const double> alphas) {
  for (double a : alphas)
    if (!(a > 0.0 && a <= 2.0))
      throw RangeError("alpha=" + std::to_string(a) + " outside (0, 2]");
}

inline SweepResult threshold_sweep(const EnsembleConfig& config, std::span<const double> alphas,
                                   std::size_t replicas, unsigned threads = 0) {
  config.validate();
  validate_alphas(alphas);
  if (replicas == 0) throw RangeError("replica budget is 0; nothing to measure");
  SweepResult result{config, replicas, {}};
  for (std::size_t c = 0; c < alphas.size(); ++c) {
    const std::size_t k = resample_count(config.n, config.p, alphas[c]);
    result.cells.push_back(overlap_cell(config, c, k, alphas[c], replicas, threads));
  }
  return result;
}

struct MonotoneViolation {
  std::size_t cell = 0;  // violation between cell and cell + 1
  double increase = 0.0;
  double allowed = 0.0;
};

/// Adjacent cells (ordered by k) whose mean inner_v rises by more than
/// `tolerance` pooled standard errors.
[[nodiscard]] inline std::vector<MonotoneViolation> monotone_violations(const SweepResult& sweep,
                                                                        double tolerance = 2.0) {
  std::vector<MonotoneViolation> out;
  for (std::size_t c = 0; c + 1 < sweep.cells.size(); ++c) {
    const auto& a = sweep.cells[c].inner_v;
    const auto& b = sweep.cells[c + 1].inner_v;
    const double pooled = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    const double rise = b.mean - a.mean;
    if (rise > tolerance * pooled) out.push_back({c, rise, tolerance * pooled});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variance formula for functions of independent entries.

enum class Statistic { top_eigenvalue, top_singular_value, entry_sum };

[[nodiscard]] inline std::string_view to_string(Statistic s) noexcept {
  switch (s) {
    case Statistic::top_eigenvalue: return "lambda1";
    case Statistic::top_singular_value: return "sigma1";
    case Statistic::entry_sum: return "entry_sum";
  }
  return "unknown";
}

[[nodiscard]] inline Statistic parse_statistic(std::string_view name) {
  if (name == "lambda1") return Statistic::top_eigenvalue;
  if (name == "sigma1") return Statistic::top_singular_value;
  if (name == "entry_sum") return Statistic::entry_sum;
  throw ConfigError("unknown statistic '" + std::string(name) + "' (expected lambda1, sigma1 or entry_sum)");
}

[[nodiscard]] inline double evaluate_statistic(Statistic s, const Eigen::MatrixXd& x) {
  switch (s) {
    case Statistic::top_eigenvalue: return top_eigenvalue(x);
    case Statistic::top_singular_value: return std::sqrt(std::max(0.0, top_eigenvalue(x)));
    case Statistic::entry_sum: return x.sum();
  }
  return 0.0;
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct BkEstimate {
  std::size_t k = 0;
  Estimate bk;
  double bound = 0.0;  // 2 Var / k * (N + 1) / N
};

struct VarianceEstimate {
  Statistic target = Statistic::top_eigenvalue;
  std::size_t samples = 0;
  Estimate var_formula;
  Estimate var_empirical;
  std::vector<BkEstimate> bk_values;

  [[nodiscard]] double pooled_std_error() const {
    return std::hypot(var_formula.std_error, var_empirical.std_error);
  }
};

namespace detail {

inline std::vector<std::size_t> random_permutation(std::size_t size, RngStream& stream) {
  std::vector<std::size_t> perm(size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = size; i > 1; --i) std::swap(perm[i - 1], perm[stream.uniform_index(0, i - 1)]);
  return perm;
}

// One draw of (1/2) sum_i (f(X) - f(X^(pi_i))) (f(X^{pi[i-1]}) - f(X^{pi[i]})).
inline double variance_formula_draw(const EnsembleConfig& config, Statistic statistic, std::size_t draw) {
  RngStream xs(config.base_seed, Purpose::matrix, draw);
  RngStream cs(config.base_seed, Purpose::copy, draw);
  RngStream ps(config.base_seed, Purpose::permutation, draw);
  const DataMatrix x = sample_matrix(config, xs);
  const DataMatrix copy = sample_matrix(config, cs);
  const auto perm = random_permutation(config.entry_count(), ps);

  const double f0 = evaluate_statistic(statistic, x.entries);
  Eigen::MatrixXd single = x.entries;
  Eigen::MatrixXd prefix = x.entries;
  double previous = f0;
  double sum = 0.0;
  for (std::size_t linear : perm) {
    // Column-major linear index, matching Eigen storage.
    const double* src = copy.entries.data() + linear;
    double& s = single.data()[linear];
    const double saved = s;
    s = *src;
    const double fi = evaluate_statistic(statistic, single);
    s = saved;
    prefix.data()[linear] = *src;
    const double current = evaluate_statistic(statistic, prefix);
    sum += (f0 - fi) * (previous - current);
    previous = current;
  }
  return 0.5 * sum;
}

// One draw of (f(X) - f(X^(j))) (f(X^{pi[k-1]}) - f(X^{(j) o pi[k-1]})).
inline double bk_draw(const EnsembleConfig& config, Statistic statistic, std::size_t k, std::size_t k_slot,
                      std::size_t draw) {
  RngStream stream(config.base_seed, Purpose::bk_draw, cell_replica_index(k_slot, draw));
  const DataMatrix x = sample_matrix(config, stream);
  const DataMatrix copy = sample_matrix(config, stream);
  const DataMatrix copy2 = sample_matrix(config, stream);
  const auto perm = random_permutation(config.entry_count(), stream);
  const std::size_t j = stream.uniform_index(0, config.entry_count() - 1);

  Eigen::MatrixXd xj = x.entries;
  xj.data()[j] = copy.entries.data()[j];
  Eigen::MatrixXd prefix = x.entries;
  for (std::size_t i = 0; i + 1 < k; ++i) prefix.data()[perm[i]] = copy.entries.data()[perm[i]];
  Eigen::MatrixXd prefix_j = prefix;
  prefix_j.data()[j] = copy2.entries.data()[j];

  return (evaluate_statistic(statistic, x.entries) - evaluate_statistic(statistic, xj)) *
         (evaluate_statistic(statistic, prefix) - evaluate_statistic(statistic, prefix_j));
}

inline Estimate mean_estimate(std::span<const double> values) {
  return {stats::mean(values), stats::std_error(values)};
}

}  // namespace detail

/// Monte Carlo estimate of Var f(X) from the resampling formula, an
/// equal-budget direct sample variance, and B_k for each requested k.
inline VarianceEstimate chatterjee_variance(const EnsembleConfig& config, Statistic statistic,
                                            std::size_t mc_samples, std::span<const std::size_t> k_list = {},
                                            unsigned threads = 0) {
  config.validate();
  const std::size_t total = config.entry_count();
  if (total > 10000) throw RangeError("variance formula needs np <= 1e4 (got " + std::to_string(total) + ")");
  if (mc_samples < 2) throw RangeError("variance formula needs at least 2 Monte Carlo samples");
  for (std::size_t k : k_list)
    if (k < 1 || k > total) throw RangeError("B_k index k=" + std::to_string(k) + " outside [1, np]");

  VarianceEstimate out;
  out.target = statistic;
  out.samples = mc_samples;

  const auto formula = run_indexed(mc_samples, threads, [&](std::size_t d) {
    return detail::variance_formula_draw(config, statistic, d);
  });
  out.var_formula = detail::mean_estimate(formula);

  const auto direct = run_indexed(mc_samples, threads, [&](std::size_t d) {
    RngStream s(config.base_seed, Purpose::empirical, d);
    return evaluate_statistic(statistic, sample_matrix(config, s).entries);
  });
  out.var_empirical = {stats::variance(direct), stats::variance_std_error(direct)};

  const double n_total = static_cast<double>(total);
  for (std::size_t slot = 0; slot < k_list.size(); ++slot) {
    const std::size_t k = k_list[slot];
    const auto draws = run_indexed(mc_samples, threads, [&](std::size_t d) {
      return detail::bk_draw(config, statistic, k, slot, d);
    });
    out.bk_values.push_back({k, detail::mean_estimate(draws),
                             2.0 * out.var_empirical.value / static_cast<double>(k) * (n_total + 1.0) / n_total});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single-entry perturbations.

struct SingleEntryRecord {
  EntryIndex entry;
  double eigenvalue_shift = 0.0;  // |lambda_1 - lambda_1^{(i,a)}|
  double vector_sup_dist = 0.0;   // min_s |v - s v^{(i,a)}|_inf
  bool gap_ok = true;
};

struct SingleEntryReport {
  std::size_t n = 0;
  std::size_t p = 0;
  double delta = 0.0;
  std::vector<SingleEntryRecord> records;
  double max_shift = 0.0;
  double median_shift = 0.0;
  double max_vector_dist = 0.0;
  double median_vector_dist = 0.0;
  double eigenvalue_scale = 0.0;  // n^{-3/2}
  double vector_scale = 0.0;      // n^{-1/2 - delta}
  std::size_t excluded = 0;
};

inline SingleEntryRecord single_entry_effect(const DataMatrix& base, const SpectralSummary& base_summary,
                                             EntryIndex entry, RngStream& stream) {
  const DataMatrix variant = single_entry_variant(base, entry.row, entry.col, stream);
  const SpectralSummary s = decompose(variant);
  const Eigen::VectorXd v = base_summary.right_vectors.col(0);
  const Eigen::VectorXd w = s.right_vectors.col(0);
  SingleEntryRecord r;
  r.entry = entry;
  r.eigenvalue_shift = std::abs(base_summary.top_eigenvalue() - s.top_eigenvalue());
  r.vector_sup_dist = std::min((v - w).cwiseAbs().maxCoeff(), (v + w).cwiseAbs().maxCoeff());
  r.gap_ok = base_summary.top_is_simple() && s.top_is_simple();
  return r;
}

inline SingleEntryReport single_entry_study(const EnsembleConfig& config, std::size_t samples,
                                            unsigned threads = 0, double delta = 0.25) {
  config.validate();
  if (samples > config.entry_count()) throw RangeError("more single-entry samples than entries");
  RngStream xs(config.base_seed, Purpose::matrix, 0);
  RngStream ps(config.base_seed, Purpose::plan, 0);
  const DataMatrix base = sample_matrix(config, xs);
  const SpectralSummary base_summary = decompose(base);
  const ResamplePlan positions = draw_resample_plan(config.n, config.p, samples, ps);

  SingleEntryReport report;
  report.n = config.n;
  report.p = config.p;
  report.delta = delta;
  report.records = run_indexed(samples, threads, [&](std::size_t t) {
    RngStream fresh(config.base_seed, Purpose::single_entry, t);
    return single_entry_effect(base, base_summary, positions.pairs[t], fresh);
  });
  std::vector<double> shifts, dists;
  for (const auto& r : report.records) {
    if (!r.gap_ok) {
      ++report.excluded;
      continue;
    }
    shifts.push_back(r.eigenvalue_shift);
    dists.push_back(r.vector_sup_dist);
  }
  const double n = static_cast<double>(config.n);
  report.max_shift = stats::max(shifts);
  report.median_shift = stats::median(shifts);
  report.max_vector_dist = stats::max(dists);
  report.median_vector_dist = stats::median(dists);
  report.eigenvalue_scale = std::pow(n, -1.5);
  report.vector_scale = std::pow(n, -0.5 - delta);
  return report;
}

// ---------------------------------------------------------------------------
// Stability of the top eigenvalue and resolvent-based reconstruction.

/// eta = n^{-2/3 - delta}, the edge probing scale.
[[nodiscard]] inline double edge_eta(std::size_t n, double delta = 0.05) {
  return std::pow(static_cast<double>(n), -2.0 / 3.0 - delta);
}

struct StabilityRecord {
  std::size_t replica = 0;
  double eigenvalue_shift = 0.0;        // |lambda - lambda^[k]|
  double reconstruction_quality = 0.0;  // |<v_hat^[k], v^[k]>|
  double reconstruction_base_overlap = 0.0;  // |<v_hat^[k], v>|
  bool gap_ok = true;
};

struct StabilityReport {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t k = 0;
  double eta = 0.0;
  bool cross_probe = true;
  std::vector<StabilityRecord> records;
  double median_shift = 0.0;
  double max_shift = 0.0;
  double median_quality = 0.0;
  double theory_scale = 0.0;  // n^{-2/3}
  std::size_t excluded = 0;
};

/// With cross_probe the resampled resolvent is read at z = lambda + i eta
/// using the base matrix's lambda; otherwise its own lambda^[k].
inline StabilityReport stability_study(const EnsembleConfig& config, std::size_t k, std::size_t replicas,
                                       unsigned threads = 0, double eta_delta = 0.05,
                                       bool cross_probe = true) {
  config.validate();
  if (k > config.entry_count()) throw RangeError("k exceeds np");
  if (replicas == 0) throw RangeError("replica budget is 0; nothing to measure");
  StabilityReport report;
  report.n = config.n;
  report.p = config.p;
  report.k = k;
  report.eta = edge_eta(config.n, eta_delta);
  report.cross_probe = cross_probe;
  report.theory_scale = std::pow(static_cast<double>(config.n), -2.0 / 3.0);

  report.records = run_indexed(replicas, threads, [&](std::size_t r) {
    RngStream ms(config.base_seed, Purpose::matrix, r);
    RngStream ps(config.base_seed, Purpose::plan, r);
    RngStream fs(config.base_seed, Purpose::fresh, r);
    DataMatrix x = sample_matrix(config, ms);
    ResamplePlan plan = draw_resample_plan(config.n, config.p, k, ps);
    const CoupledPair pair = apply_plan(std::move(x), std::move(plan), fs);
    const SpectralSummary a = decompose(pair.base);
    const SpectralSummary b = k == 0 ? a : decompose(pair.resampled);
    StabilityRecord rec;
    rec.replica = r;
    rec.eigenvalue_shift = std::abs(a.top_eigenvalue() - b.top_eigenvalue());
    rec.gap_ok = a.top_is_simple() && b.top_is_simple();
    const double hint = cross_probe ? a.top_eigenvalue() : b.top_eigenvalue();
    try {
      const Reconstruction rc = eigvec_reconstruct(pair.resampled, hint, report.eta, b);
      rec.reconstruction_quality = rc.quality;
      rec.reconstruction_base_overlap = std::abs(rc.v_hat.dot(a.right_vectors.col(0)));
    } catch (const ReconstructionError&) {
      rec.reconstruction_quality = 0.0;
      rec.reconstruction_base_overlap = 0.0;
    }
    return rec;
  });

  std::vector<double> shifts, quality;
  for (const auto& r : report.records) {
    if (!r.gap_ok) {
      ++report.excluded;
      continue;
    }
    shifts.push_back(r.eigenvalue_shift);
    quality.push_back(r.reconstruction_quality);
  }
  report.median_shift = stats::median(shifts);
  report.max_shift = stats::max(shifts);
  report.median_quality = stats::median(quality);
  return report;
}

// ---------------------------------------------------------------------------
// Edge fluctuations and rigidity.

struct EdgeRow {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t replicas = 0;
  double lambda_plus = 0.0;
  double mean_lambda1 = 0.0;
  double var_lambda1 = 0.0;
  double var_std_error = 0.0;
  double mean_edge_offset = 0.0;   // mean (lambda_1 - lambda_+)
  double mean_abs_edge_dev = 0.0;  // mean |lambda_1 - lambda_+|
  double rigidity_median = 0.0;    // median over replicas of max bulk |lambda_k - gamma_k|
};

struct EdgeReport {
  double xi = 0.0;
  std::vector<EdgeRow> rows;
  stats::LinearFit fit;  // log Var(lambda_1) against log n
};

/// Largest |lambda_k - gamma_k| over the bulk window p/4 <= k <= 3p/4
/// (1-based, eigenvalues descending).
[[nodiscard]] inline double bulk_rigidity(const Eigen::VectorXd& eigenvalues, std::span<const double> gammas) {
  const std::size_t p = static_cast<std::size_t>(eigenvalues.size());
  const std::size_t lo = std::max<std::size_t>(1, (p + 3) / 4);
  const std::size_t hi = std::max(lo, (3 * p) / 4);
  double worst = 0.0;
  for (std::size_t k = lo; k <= hi && k <= p; ++k)
    worst = std::max(worst, std::abs(eigenvalues(static_cast<Eigen::Index>(k - 1)) - gammas[k - 1]));
  return worst;
}

inline EdgeReport edge_scaling_study(double xi, std::span<const std::size_t> n_grid, std::size_t replicas,
                                     EntryLaw law, std::uint64_t base_seed, unsigned threads = 0) {
  static_cast<void>(mp_edges(xi));  // domain check
  if (n_grid.size() < 3) throw RangeError("edge scaling regression needs at least 3 grid points");
  for (std::size_t i = 0; i + 1 < n_grid.size(); ++i)
    if (n_grid[i] >= n_grid[i + 1]) throw RangeError("n grid must be strictly ascending");
  if (replicas < 4) throw RangeError("edge scaling needs at least 4 replicas per n");

  EdgeReport report;
  report.xi = xi;
  std::vector<double> log_n, log_var;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    EnsembleConfig config{n_grid[g], 0, law, base_seed};
    config.p = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(xi * static_cast<double>(config.n))));
    config.validate();
    const MPModel model(config.xi());
    const std::vector<double> gammas = mp_quantiles(model, config.p);

    struct Draw {
      double lambda1;
      double rigidity;
    };
    const auto draws = run_indexed(replicas, threads, [&](std::size_t r) {
      RngStream s(base_seed, Purpose::matrix, cell_replica_index(g, r));
      const DataMatrix x = sample_matrix(config, s);
      const Eigen::VectorXd ev = eigenvalues_only(x.entries);
      return Draw{ev(0), bulk_rigidity(ev, gammas)};
    });

    std::vector<double> top, offset, abs_dev, rigidity;
    for (const auto& d : draws) {
      top.push_back(d.lambda1);
      offset.push_back(d.lambda1 - model.lambda_plus());
      abs_dev.push_back(std::abs(d.lambda1 - model.lambda_plus()));
      rigidity.push_back(d.rigidity);
    }
    EdgeRow row;
    row.n = config.n;
    row.p = config.p;
    row.replicas = replicas;
    row.lambda_plus = model.lambda_plus();
    row.mean_lambda1 = stats::mean(top);
    row.var_lambda1 = stats::variance(top);
    row.var_std_error = stats::variance_std_error(top);
    row.mean_edge_offset = stats::mean(offset);
    row.mean_abs_edge_dev = stats::mean(abs_dev);
    row.rigidity_median = stats::median(rigidity);
    report.rows.push_back(row);
    log_n.push_back(std::log(static_cast<double>(config.n)));
    log_var.push_back(std::log(row.var_lambda1));
  }
  report.fit = stats::least_squares(log_n, log_var);
  return report;
}

// ---------------------------------------------------------------------------
// Local law measurements.

struct LocalLawRecord {
  std::size_t z_index = 0;
  SpectralParameter z;
  std::size_t replica = 0;
  LocalLawGap gap;
};

struct LocalLawReport {
  std::size_t n = 0;
  std::size_t p = 0;
  double epsilon = 0.0;
  std::vector<LocalLawRecord> records;  // z-major, then replica
};

inline LocalLawReport local_law_study(const EnsembleConfig& config, std::span<const SpectralParameter> zs,
                                      std::size_t replicas, double epsilon = 0.0, unsigned threads = 0) {
  config.validate();
  if (replicas == 0) throw RangeError("replica budget is 0; nothing to measure");
  const MPModel model(config.xi());
  LocalLawReport report{config.n, config.p, epsilon, {}};
  for (std::size_t zi = 0; zi < zs.size(); ++zi) {
    if (!(zs[zi].eta > 0.0)) throw DomainError("local law probes need eta > 0");
    const DeterministicLimit g = deterministic_limit(model, zs[zi], config.n, config.p);
    auto rows = run_indexed(replicas, threads, [&](std::size_t r) {
      // The same matrices are probed at every z.
      RngStream s(config.base_seed, Purpose::matrix, r);
      const DataMatrix x = sample_matrix(config, s);
      const ResolventProbe probe = resolvent_at(x, zs[zi]);
      return LocalLawRecord{zi, zs[zi], r, local_law_gap(probe, g, epsilon)};
    });
    report.records.insert(report.records.end(), rows.begin(), rows.end());
  }
  return report;
}

}  // namespace rspca
