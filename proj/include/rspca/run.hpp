#pragma once

// Command dispatch: runs one configured study, writes its tables, plots and
// the run ledger, and maps failures to exit codes.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 interrupted (partial outputs kept under a ".partial" suffix).

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rspca/config.hpp"
#include "rspca/errors.hpp"
#include "rspca/experiments.hpp"
#include "rspca/mp.hpp"
#include "rspca/plot.hpp"
#include "rspca/table.hpp"

namespace rspca {

inline constexpr std::string_view kVersion = "rspca 1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInterrupted = 3;

inline std::atomic<bool>& stop_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

/// Async-signal-safe: only stores to a lock-free atomic.
inline void request_stop() noexcept { stop_flag().store(true, std::memory_order_relaxed); }
inline bool stop_requested() noexcept { return stop_flag().load(std::memory_order_relaxed); }
inline void clear_stop() noexcept { stop_flag().store(false, std::memory_order_relaxed); }

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  bool resume = false;
  // Stops a sweep after this many newly computed cells, as if interrupted.
  std::size_t stop_after_cells = std::numeric_limits<std::size_t>::max();
};

inline RunConfig apply_overrides(RunConfig cfg, const RunOptions& opts) {
  if (opts.out_dir) cfg.output.dir = *opts.out_dir;
  if (opts.threads) cfg.output.threads = *opts.threads;
  if (opts.seed) cfg.ensemble.base_seed = *opts.seed;
  return cfg;
}

/// How every random draw of a command is derived from the base seed.
[[nodiscard]] inline std::string seed_scheme(const std::string& command) {
  const std::string prefix = "stream=mix64(seed, purpose, index); ";
  if (command == "mp") return prefix + "histogram=11 index=sample";
  if (command == "sweep") return prefix + "matrix=1 plan=2 fresh=3 index=(cell<<32)|replica";
  if (command == "varformula")
    return prefix + "matrix=1 copy=4 permutation=5 index=draw; empirical=7 index=draw; bk_draw=8 index=(k_slot<<32)|draw";
  if (command == "locallaw") return prefix + "matrix=1 index=replica (shared across z)";
  if (command == "perturb") return prefix + "matrix=1 plan=2 index=0; single_entry=9 index=sample";
  if (command == "stability") return prefix + "matrix=1 plan=2 fresh=3 index=replica";
  if (command == "edges") return prefix + "matrix=1 index=(grid<<32)|replica";
  return prefix;
}

struct OutputRecord {
  std::string file;
  std::string checksum;  // FNV-1a 64, hex
};

namespace detail {

inline Column real_col(std::string name, std::string unit = "") { return {std::move(name), std::move(unit), ColumnType::real}; }
inline Column int_col(std::string name) { return {std::move(name), "", ColumnType::integer}; }
inline Column bool_col(std::string name) { return {std::move(name), "", ColumnType::boolean}; }
inline Column text_col(std::string name) { return {std::move(name), "", ColumnType::text}; }

inline std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

class OutputSink {
 public:
  OutputSink(const RunConfig& cfg) : cfg_(cfg), dir_(cfg.output.dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

  void stamp(ResultTable& t) const {
    t.add_meta("code_version", std::string(kVersion));
    t.add_meta("config", config_echo(cfg_));
    t.add_meta("seed_scheme", seed_scheme(cfg_.command));
  }

  void table(const ResultTable& t) {
    if (cfg_.output.format != OutputFormat::json) write(t, ".csv", TableFormat::csv);
    if (cfg_.output.format != OutputFormat::csv) write(t, ".json", TableFormat::json);
  }

  /// Writes the table under "<name>.csv.partial" for an unfinished run.
  void partial(const ResultTable& t) const {
    std::ofstream out(dir_ / (t.name + ".csv.partial"), std::ios::binary | std::ios::trunc);
    out << to_csv(t);
  }

  void plot(const ResultTable& t, PlotKind kind) {
    if (!cfg_.output.plot) return;
    const std::string svg = render_plot(t, kind);
    const std::string file = t.name + ".svg";
    write_file_atomic(dir_ / file, svg);
    records_.push_back({file, hex64(fnv1a64(svg))});
  }

  [[nodiscard]] const std::vector<OutputRecord>& records() const { return records_; }

  void ledger(double wall_seconds, unsigned threads) {
    nlohmann::ordered_json doc;
    doc["code_version"] = std::string(kVersion);
    doc["command"] = cfg_.command;
    doc["config"] = config_echo(cfg_);
    doc["seed_scheme"] = seed_scheme(cfg_.command);
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& r : records_) files.push_back({{"file", r.file}, {"fnv1a64", r.checksum}});
    doc["outputs"] = std::move(files);
    write_file_atomic(dir_ / "ledger.json", doc.dump(2) + "\n");
    // Timing varies run to run, so it is kept apart from the deterministic outputs.
    char buf[160];
    std::snprintf(buf, sizeof(buf), "command=%s\nwall_clock_seconds=%.3f\nthreads=%u\n", cfg_.command.c_str(),
                  wall_seconds, threads);
    write_file_atomic(dir_ / "run.log", buf);
  }

 private:
  void write(const ResultTable& t, const char* ext, TableFormat format) {
    const std::string file = t.name + ext;
    records_.push_back({file, hex64(write_table(t, dir_ / file, format))});
  }

  const RunConfig& cfg_;
  std::filesystem::path dir_;
  std::vector<OutputRecord> records_;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Commands.

inline void run_mp(const RunConfig& cfg, OutputSink& sink, unsigned threads, std::ostream& out) {
  const MPModel model(cfg.xi);
  ResultTable density("mp_density", {real_col("x"), real_col("density"), real_col("stieltjes_re"), real_col("stieltjes_im")});
  sink.stamp(density);
  density.add_meta("xi", format_double(model.xi()));
  density.add_meta("eta", format_double(cfg.mp.eta));
  const double width = model.lambda_plus() - model.lambda_minus();
  for (std::size_t i = 0; i < cfg.mp.points; ++i) {
    const double x = model.lambda_minus() + (static_cast<double>(i) + 0.5) / static_cast<double>(cfg.mp.points) * width;
    const complex m = mp_stieltjes(model, {x, cfg.mp.eta});
    density.add_row({x, mp_density(model, x), m.real(), m.imag()});
  }
  sink.table(density);
  sink.plot(density, PlotKind::density_overlay);
  out << "mp: xi=" << fmt(model.xi()) << " edges=[" << fmt(model.lambda_minus()) << ", " << fmt(model.lambda_plus())
      << "] points=" << cfg.mp.points << "\n";

  if (cfg.mp.samples == 0) return;
  const EnsembleConfig& ens = cfg.ensemble;
  const auto spectra = run_indexed(cfg.mp.samples, threads, [&](std::size_t r) {
    RngStream s(ens.base_seed, Purpose::histogram, r);
    return eigenvalues_only(sample_matrix(ens, s).entries);
  });
  const double lo = std::max(0.0, model.lambda_minus() - 0.25);
  const double hi = model.lambda_plus() + 0.25;
  const double bin = (hi - lo) / static_cast<double>(cfg.mp.bins);
  std::vector<std::int64_t> counts(cfg.mp.bins, 0);
  std::size_t total = 0;
  std::size_t outside = 0;
  for (const auto& ev : spectra) {
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      ++total;
      const double v = ev(k);
      if (v < lo || v >= hi) {
        ++outside;
        continue;
      }
      ++counts[std::min(cfg.mp.bins - 1, static_cast<std::size_t>((v - lo) / bin))];
    }
  }
  ResultTable hist("mp_empirical", {real_col("x"), real_col("density"), int_col("count")});
  sink.stamp(hist);
  hist.add_meta("xi", format_double(model.xi()));
  hist.add_meta("samples", std::to_string(cfg.mp.samples));
  hist.add_meta("eigenvalues_outside_range", std::to_string(outside));
  for (std::size_t b = 0; b < cfg.mp.bins; ++b) {
    const double centre = lo + (static_cast<double>(b) + 0.5) * bin;
    hist.add_row({centre, static_cast<double>(counts[b]) / (static_cast<double>(total) * bin), counts[b]});
  }
  sink.table(hist);
  sink.plot(hist, PlotKind::density_overlay);
  out << "mp: empirical spectrum from " << cfg.mp.samples << " matrices, " << outside << " eigenvalues outside range\n";
}

inline ResultTable sweep_summary_table(const std::vector<SweepCell>& cells) {
  std::vector<Column> cols{int_col("cell"),      int_col("n"),          int_col("p"),        int_col("k"),
                           real_col("alpha"),    real_col("alpha_effective"), int_col("replicas"), int_col("valid"),
                           int_col("excluded"),  bool_col("reliable")};
  for (const char* f : {"inner_v", "inner_u", "sup_dist", "l2_dist"}) {
    cols.push_back(real_col(std::string("mean_") + f));
    cols.push_back(real_col(std::string("median_") + f));
    cols.push_back(real_col(std::string("se_") + f));
  }
  ResultTable t("sweep", std::move(cols));
  for (const auto& c : cells) {
    const double eff = c.k > 0 ? std::log(static_cast<double>(c.k)) / std::log(static_cast<double>(c.n))
                               : -std::numeric_limits<double>::infinity();
    std::vector<Value> row{as_int(c.index), as_int(c.n),        as_int(c.p),       as_int(c.k), c.alpha, eff,
                           as_int(c.replicas.size()), as_int(c.valid), as_int(c.excluded), c.reliable};
    for (const auto* s : {&c.inner_v, &c.inner_u, &c.sup_dist, &c.l2_dist}) {
      row.emplace_back(s->mean);
      row.emplace_back(s->median);
      row.emplace_back(s->std_error);
    }
    t.add_row(std::move(row));
  }
  return t;
}

inline ResultTable sweep_replica_table(const std::vector<SweepCell>& cells, bool include_excluded) {
  ResultTable t(include_excluded ? "sweep_checkpoint" : "sweep_replicas",
                {int_col("cell"), real_col("alpha"), int_col("k"), int_col("replica"), real_col("inner_v"),
                 real_col("inner_u"), real_col("sup_dist"), real_col("l2_dist"), bool_col("gap_ok")});
  for (const auto& c : cells)
    for (const auto& r : c.replicas) {
      if (!include_excluded && !r.stats.gap_ok) continue;
      t.add_row({as_int(c.index), c.alpha, as_int(c.k), as_int(r.replica), r.stats.inner_v, r.stats.inner_u,
                 r.stats.sup_dist, r.stats.l2_dist, r.stats.gap_ok});
    }
  return t;
}

/// Cells recorded in a checkpoint file, keyed by cell index.
inline std::map<std::size_t, std::vector<ReplicaOverlap>> load_checkpoint(const std::filesystem::path& path,
                                                                          const std::string& echo) {
  std::map<std::size_t, std::vector<ReplicaOverlap>> cells;
  if (!std::filesystem::exists(path)) return cells;
  const ResultTable t = from_csv(read_file(path));
  const std::string* recorded = t.find_meta("config");
  if (recorded == nullptr || *recorded != echo)
    throw Error("checkpoint '" + path.string() + "' was written for a different configuration");
  for (const auto& row : t.rows) {
    ReplicaOverlap r;
    const auto cell = static_cast<std::size_t>(std::get<std::int64_t>(row[0]));
    r.replica = static_cast<std::size_t>(std::get<std::int64_t>(row[3]));
    r.stats = {std::get<double>(row[4]), std::get<double>(row[5]), std::get<double>(row[6]), std::get<double>(row[7]),
               std::get<bool>(row[8])};
    cells[cell].push_back(r);
  }
  return cells;
}

inline void print_cell(std::ostream& out, const SweepCell& c, bool resumed) {
  out << "cell " << c.index << ": alpha=" << fmt(c.alpha) << " k=" << c.k << " mean_inner_v=" << fmt(c.inner_v.mean)
      << " (se " << fmt(c.inner_v.std_error) << ") mean_sup_dist=" << fmt(c.sup_dist.mean) << " valid=" << c.valid
      << "/" << c.replicas.size() << (c.reliable ? "" : " UNRELIABLE") << (resumed ? " [resumed]" : "") << "\n";
}

inline void run_sweep(const RunConfig& cfg, OutputSink& sink, unsigned threads, const RunOptions& opts,
                      std::ostream& out) {
  const auto& ens = cfg.ensemble;
  validate_alphas(cfg.sweep.alphas);
  const std::string echo = config_echo(cfg);
  const auto checkpoint_path = sink.dir() / "sweep_checkpoint.csv.partial";
  auto done = opts.resume ? load_checkpoint(checkpoint_path, echo) : std::map<std::size_t, std::vector<ReplicaOverlap>>{};

  std::vector<SweepCell> cells;
  std::size_t computed = 0;
  for (std::size_t c = 0; c < cfg.sweep.alphas.size(); ++c) {
    const double alpha = cfg.sweep.alphas[c];
    const std::size_t k = resample_count(ens.n, ens.p, alpha);
    const auto it = done.find(c);
    if (it != done.end() && it->second.size() == cfg.sweep.replicas) {
      cells.push_back(summarize_cell(c, ens, k, alpha, it->second));
      print_cell(out, cells.back(), true);
      continue;
    }
    if (computed >= opts.stop_after_cells || stop_requested())
      throw InterruptedError("sweep interrupted after " + std::to_string(cells.size()) + " of " +
                             std::to_string(cfg.sweep.alphas.size()) + " cells; rerun with --resume");
    cells.push_back(overlap_cell(ens, c, k, alpha, cfg.sweep.replicas, threads));
    ++computed;
    print_cell(out, cells.back(), false);

    ResultTable checkpoint = sweep_replica_table(cells, true);
    checkpoint.add_meta("config", echo);
    std::ofstream(checkpoint_path, std::ios::binary | std::ios::trunc) << to_csv(checkpoint);
    ResultTable partial = sweep_summary_table(cells);
    sink.stamp(partial);
    sink.partial(partial);
  }

  ResultTable summary = sweep_summary_table(cells);
  sink.stamp(summary);
  std::size_t excluded = 0;
  for (const auto& c : cells) excluded += c.excluded;
  summary.add_meta("min_reliable_replicas", std::to_string(kMinReliableReplicas));
  const auto violations = monotone_violations({ens, cfg.sweep.replicas, cells});
  summary.add_meta("monotone_violations", std::to_string(violations.size()));
  ResultTable replicas = sweep_replica_table(cells, false);
  sink.stamp(replicas);
  replicas.add_meta("excluded_replicas", std::to_string(excluded));
  sink.table(summary);
  sink.table(replicas);
  sink.plot(summary, PlotKind::transition_curve);

  std::error_code ec;
  std::filesystem::remove(checkpoint_path, ec);
  std::filesystem::remove(sink.dir() / "sweep.csv.partial", ec);
}

inline void run_varformula(const RunConfig& cfg, OutputSink& sink, unsigned threads, std::ostream& out) {
  const auto& p = cfg.varformula;
  const VarianceEstimate est = chatterjee_variance(cfg.ensemble, p.statistic, p.samples, p.k_list, threads);
  ResultTable t("varformula",
                {text_col("quantity"), int_col("k"), real_col("estimate"), real_col("std_error"), real_col("bound")});
  sink.stamp(t);
  t.add_meta("statistic", std::string(to_string(p.statistic)));
  t.add_meta("entries", std::to_string(cfg.ensemble.entry_count()));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  t.add_row({std::string("var_formula"), std::int64_t{0}, est.var_formula.value, est.var_formula.std_error, nan});
  t.add_row({std::string("var_empirical"), std::int64_t{0}, est.var_empirical.value, est.var_empirical.std_error, nan});
  for (const auto& b : est.bk_values)
    t.add_row({std::string("B_k"), as_int(b.k), b.bk.value, b.bk.std_error, b.bound});
  sink.table(t);
  const double z = (est.var_formula.value - est.var_empirical.value) / est.pooled_std_error();
  out << "varformula: " << to_string(p.statistic) << " formula=" << fmt(est.var_formula.value) << " (se "
      << fmt(est.var_formula.std_error) << ") empirical=" << fmt(est.var_empirical.value) << " (se "
      << fmt(est.var_empirical.std_error) << ") z=" << fmt(z) << "\n";
  for (const auto& b : est.bk_values)
    out << "varformula: B_" << b.k << "=" << fmt(b.bk.value) << " (se " << fmt(b.bk.std_error)
        << ") bound=" << fmt(b.bound) << "\n";
}

inline void run_locallaw(const RunConfig& cfg, OutputSink& sink, unsigned threads, std::ostream& out) {
  const auto& p = cfg.locallaw;
  const LocalLawReport report = local_law_study(cfg.ensemble, p.z, p.replicas, p.epsilon, threads);
  ResultTable t("locallaw", {int_col("z_index"), real_col("E"), real_col("eta"), int_col("replica"),
                             real_col("max_offdiag"), real_col("max_diag_dev"), real_col("psi")});
  sink.stamp(t);
  t.add_meta("epsilon", format_double(p.epsilon));
  for (const auto& r : report.records)
    t.add_row({as_int(r.z_index), r.z.E, r.z.eta, as_int(r.replica), r.gap.max_offdiag, r.gap.max_diag_dev, r.gap.psi});
  sink.table(t);
  for (std::size_t zi = 0; zi < p.z.size(); ++zi) {
    std::vector<double> diag;
    std::size_t within = 0;
    double psi = 0.0;
    for (const auto& r : report.records) {
      if (r.z_index != zi) continue;
      diag.push_back(r.gap.max_diag_dev);
      psi = r.gap.psi;
      if (r.gap.max_offdiag <= 3.0 * r.gap.psi) ++within;
    }
    out << "locallaw: z=" << fmt(p.z[zi].E) << "+" << fmt(p.z[zi].eta) << "i psi=" << fmt(psi)
        << " offdiag<=3psi in " << within << "/" << diag.size() << " median_diag_dev=" << fmt(stats::median(diag))
        << "\n";
  }
}

inline void run_perturb(const RunConfig& cfg, OutputSink& sink, unsigned threads, std::ostream& out) {
  const auto& p = cfg.perturb;
  const SingleEntryReport rep = single_entry_study(cfg.ensemble, p.samples, threads, p.delta);
  ResultTable t("perturb", {int_col("sample"), int_col("row"), int_col("col"), real_col("eigenvalue_shift"),
                            real_col("vector_sup_dist")});
  sink.stamp(t);
  t.add_meta("excluded_samples", std::to_string(rep.excluded));
  t.add_meta("max_shift", format_double(rep.max_shift));
  t.add_meta("median_shift", format_double(rep.median_shift));
  t.add_meta("max_vector_dist", format_double(rep.max_vector_dist));
  t.add_meta("median_vector_dist", format_double(rep.median_vector_dist));
  t.add_meta("eigenvalue_scale", format_double(rep.eigenvalue_scale));
  t.add_meta("vector_scale", format_double(rep.vector_scale));
  for (std::size_t s = 0; s < rep.records.size(); ++s) {
    const auto& r = rep.records[s];
    if (!r.gap_ok) continue;
    t.add_row({as_int(s), as_int(r.entry.row), as_int(r.entry.col), r.eigenvalue_shift, r.vector_sup_dist});
  }
  sink.table(t);
  out << "perturb: max_shift=" << fmt(rep.max_shift) << " (scale " << fmt(rep.eigenvalue_scale)
      << ") median_vector_dist=" << fmt(rep.median_vector_dist) << " (scale " << fmt(rep.vector_scale)
      << ") excluded=" << rep.excluded << "\n";
}

inline void run_stability(const RunConfig& cfg, OutputSink& sink, unsigned threads, std::ostream& out) {
  const auto& p = cfg.stability;
  const StabilityReport rep = stability_study(cfg.ensemble, p.k, p.replicas, threads, p.eta_delta, p.cross_probe);
  ResultTable t("stability", {int_col("replica"), real_col("eigenvalue_shift"), real_col("reconstruction_quality"),
                              real_col("reconstruction_base_overlap")});
  sink.stamp(t);
  t.add_meta("k", std::to_string(rep.k));
  t.add_meta("eta", format_double(rep.eta));
  t.add_meta("excluded_replicas", std::to_string(rep.excluded));
  t.add_meta("theory_scale", format_double(rep.theory_scale));
  for (const auto& r : rep.records) {
    if (!r.gap_ok) continue;
    t.add_row({as_int(r.replica), r.eigenvalue_shift, r.reconstruction_quality, r.reconstruction_base_overlap});
  }
  sink.table(t);
  out << "stability: k=" << rep.k << " median_shift=" << fmt(rep.median_shift) << " (scale " << fmt(rep.theory_scale)
      << ") max_shift=" << fmt(rep.max_shift) << " median_reconstruction=" << fmt(rep.median_quality)
      << " excluded=" << rep.excluded << "\n";
}

inline void run_edges(const RunConfig& cfg, OutputSink& sink, unsigned threads, std::ostream& out) {
  const auto& p = cfg.edges;
  const EdgeReport rep =
      edge_scaling_study(cfg.xi, p.n_grid, p.replicas, cfg.ensemble.law, cfg.ensemble.base_seed, threads);
  ResultTable t("edges", {int_col("n"), int_col("p"), int_col("replicas"), real_col("lambda_plus"),
                          real_col("mean_lambda1"), real_col("var_lambda1"), real_col("se_var_lambda1"),
                          real_col("mean_edge_offset"), real_col("mean_abs_edge_dev"), real_col("rigidity_median")});
  sink.stamp(t);
  t.add_meta("xi", format_double(rep.xi));
  t.add_meta("fit_slope", format_double(rep.fit.slope));
  t.add_meta("fit_intercept", format_double(rep.fit.intercept));
  t.add_meta("fit_slope_se", format_double(rep.fit.slope_std_error));
  for (const auto& r : rep.rows) {
    t.add_row({as_int(r.n), as_int(r.p), as_int(r.replicas), r.lambda_plus, r.mean_lambda1, r.var_lambda1,
               r.var_std_error, r.mean_edge_offset, r.mean_abs_edge_dev, r.rigidity_median});
    out << "edges: n=" << r.n << " mean_lambda1=" << fmt(r.mean_lambda1) << " var=" << fmt(r.var_lambda1)
        << " mean|lambda1-edge|=" << fmt(r.mean_abs_edge_dev) << " rigidity=" << fmt(r.rigidity_median) << "\n";
  }
  sink.table(t);
  sink.plot(t, PlotKind::scaling_fit);
  out << "edges: slope=" << fmt(rep.fit.slope) << " (se " << fmt(rep.fit.slope_std_error) << ")\n";
}

inline std::string error_record(const std::exception& e, int status) {
  nlohmann::ordered_json rec;
  rec["status"] = "error";
  rec["exit_code"] = status;
  const auto* err = dynamic_cast<const Error*>(&e);
  rec["kind"] = err != nullptr ? err->kind() : "internal";
  rec["message"] = e.what();
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    if (ce->line() > 0) rec["line"] = ce->line();
    if (!ce->key().empty()) rec["key"] = ce->key();
  }
  return rec.dump();
}

}  // namespace detail

/// Runs a parsed configuration. Returns the process exit status; failures
/// are reported as one JSON object per line on `err`.
inline int run_command(RunConfig cfg, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  int status = kExitOk;
  try {
    cfg = apply_overrides(std::move(cfg), opts);
    const unsigned threads = cfg.output.threads == 0 ? default_threads() : cfg.output.threads;
    const auto start = std::chrono::steady_clock::now();
    detail::OutputSink sink(cfg);
    if (cfg.command == "mp") detail::run_mp(cfg, sink, threads, out);
    else if (cfg.command == "sweep") detail::run_sweep(cfg, sink, threads, opts, out);
    else if (cfg.command == "varformula") detail::run_varformula(cfg, sink, threads, out);
    else if (cfg.command == "locallaw") detail::run_locallaw(cfg, sink, threads, out);
    else if (cfg.command == "perturb") detail::run_perturb(cfg, sink, threads, out);
    else if (cfg.command == "stability") detail::run_stability(cfg, sink, threads, out);
    else if (cfg.command == "edges") detail::run_edges(cfg, sink, threads, out);
    else throw ConfigError("unknown command '" + cfg.command + "'");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    sink.ledger(seconds, threads);
    for (const auto& r : sink.records()) out << "wrote " << (sink.dir() / r.file).string() << " fnv1a64=" << r.checksum << "\n";
  } catch (const ConfigError& e) {
    status = kExitConfig;
    err << detail::error_record(e, status) << "\n";
  } catch (const InterruptedError& e) {
    status = kExitInterrupted;
    err << detail::error_record(e, status) << "\n";
  } catch (const std::exception& e) {
    status = kExitRuntime;
    err << detail::error_record(e, status) << "\n";
  }
  return status;
}

/// Parses the configuration text, then runs it.
inline int run_config_text(std::string_view text, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(text);
  } catch (const ConfigError& e) {
    err << detail::error_record(e, kExitConfig) << "\n";
    return kExitConfig;
  }
  return run_command(std::move(cfg), opts, out, err);
}

}  // namespace rspca
