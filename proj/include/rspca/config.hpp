#pragma once

// Run configuration: a flat key-value document with [section] headers.
//
//   schema_version = 1
//   command = sweep
//   [ensemble]
//   n = 300
//   xi = 2/3
//   [sweep]
//   alphas = [1.0, 1.5, 2.0]
//   replicas = 50
//
// Comments start with '#'. Lists are comma separated, brackets optional.
// Unknown keys, duplicate keys and sections that do not belong to the
// command are rejected with the offending line number.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rspca/ensemble.hpp"
#include "rspca/errors.hpp"
#include "rspca/experiments.hpp"
#include "rspca/mp.hpp"

namespace rspca {

inline constexpr int kSchemaVersion = 1;

enum class OutputFormat { csv, json, both };

[[nodiscard]] inline std::string_view to_string(OutputFormat f) noexcept {
  switch (f) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
    case OutputFormat::both: return "both";
  }
  return "csv";
}

struct OutputOptions {
  std::string dir = "out";
  OutputFormat format = OutputFormat::csv;
  bool plot = true;
  unsigned threads = 0;
};

struct MpParams {
  std::size_t points = 400;
  double eta = 0.01;
  std::size_t samples = 0;  // empirical spectra drawn from the ensemble
  std::size_t bins = 40;
};

struct SweepParams {
  std::vector<double> alphas;
  std::size_t replicas = 0;
};

struct VarFormulaParams {
  Statistic statistic = Statistic::top_eigenvalue;
  std::size_t samples = 0;
  std::vector<std::size_t> k_list;
};

struct LocalLawParams {
  std::vector<SpectralParameter> z;
  std::size_t replicas = 0;
  double epsilon = 0.0;
};

struct PerturbParams {
  std::size_t samples = 0;
  double delta = 0.25;
};

struct StabilityParams {
  std::size_t k = 0;
  std::size_t replicas = 0;
  double eta_delta = 0.05;
  bool cross_probe = true;
};

struct EdgeParams {
  std::vector<std::size_t> n_grid;
  std::size_t replicas = 0;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string command;
  EnsembleConfig ensemble;
  double xi = 0.0;  // always set; p / n unless only xi is known (edges)
  OutputOptions output;
  MpParams mp;
  SweepParams sweep;
  VarFormulaParams varformula;
  LocalLawParams locallaw;
  PerturbParams perturb;
  StabilityParams stability;
  EdgeParams edges;
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> commands{"mp",      "sweep",     "varformula", "locallaw",
                                                 "perturb", "stability", "edges"};
  return commands;
}

namespace detail {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::size_t line = 0;
  std::map<std::string, Entry> entries;
};

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline bool valid_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

// Section "" holds the top-level keys.
inline std::map<std::string, Section> tokenize(std::string_view text) {
  std::map<std::string, Section> sections;
  sections[""].line = 1;
  std::string current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + std::string(line) + "'", line_no);
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!valid_name(name)) throw ConfigError("invalid section name '" + name + "'", line_no);
      if (sections.contains(name)) throw ConfigError("duplicate section [" + name + "]", line_no);
      sections[name].line = line_no;
      current = name;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!valid_name(key)) throw ConfigError("invalid key '" + key + "'", line_no, key);
    if (value.empty()) throw ConfigError("empty value for '" + key + "'", line_no, key);
    auto& entries = sections[current].entries;
    if (entries.contains(key)) {
      throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(entries[key].line) + ")",
                        line_no, key);
    }
    entries[key] = {value, line_no};
  }
  return sections;
}

class SectionReader {
 public:
  SectionReader(std::string name, const Section* section) : name_(std::move(name)), section_(section) {}

  [[nodiscard]] bool has(const std::string& key) const {
    return section_ != nullptr && section_->entries.contains(key);
  }

  [[nodiscard]] std::string qualified(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  [[nodiscard]] std::size_t line_of(const std::string& key) const {
    return has(key) ? section_->entries.at(key).line : 0;
  }

  const Entry& require(const std::string& key) {
    used_.insert(key);
    // Points at the section header, the closest line to the omission.
    if (!has(key))
      throw ConfigError("missing required key '" + qualified(key) + "'", section_ ? section_->line : 0, qualified(key));
    return section_->entries.at(key);
  }

  std::optional<Entry> optional(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return section_->entries.at(key);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(qualified(key) + ": " + message, line_of(key), qualified(key));
  }

  void reject_unknown() const {
    if (section_ == nullptr) return;
    for (const auto& [key, entry] : section_->entries)
      if (!used_.contains(key)) throw ConfigError("unknown key '" + qualified(key) + "'", entry.line, qualified(key));
  }

 private:
  std::string name_;
  const Section* section_;
  std::set<std::string> used_;
};

inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const auto num = parse_real(s.substr(0, slash));
    const auto den = parse_real(s.substr(slash + 1));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
  }
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
  s = trim(s);
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v, base);
  if (s.empty() || ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') return {};
    s = trim(s.substr(1, s.size() - 2));
  }
  std::vector<std::string_view> items;
  if (s.empty()) return items;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    items.push_back(trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return items;
}

inline double read_real(SectionReader& r, const std::string& key, double lo, double hi, bool lo_open, bool hi_open,
                        std::optional<double> fallback = std::nullopt) {
  const auto entry = fallback ? r.optional(key) : std::optional<Entry>(r.require(key));
  if (!entry) return *fallback;
  const auto v = parse_real(entry->value);
  if (!v) r.fail(key, "expected a real number, got '" + entry->value + "'");
  const bool ok = (lo_open ? *v > lo : *v >= lo) && (hi_open ? *v < hi : *v <= hi);
  if (!ok) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "value " << *v << " outside " << (lo_open ? '(' : '[') << lo << ", " << hi << (hi_open ? ')' : ']');
    r.fail(key, msg.str());
  }
  return *v;
}

inline std::uint64_t read_unsigned(SectionReader& r, const std::string& key, std::uint64_t lo, std::uint64_t hi,
                                   std::optional<std::uint64_t> fallback = std::nullopt) {
  const auto entry = fallback ? r.optional(key) : std::optional<Entry>(r.require(key));
  if (!entry) return *fallback;
  const auto v = parse_unsigned(entry->value);
  if (!v) r.fail(key, "expected a non-negative integer, got '" + entry->value + "'");
  if (*v < lo || *v > hi)
    r.fail(key, "value " + std::to_string(*v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return *v;
}

inline bool read_bool(SectionReader& r, const std::string& key, bool fallback) {
  const auto entry = r.optional(key);
  if (!entry) return fallback;
  if (entry->value == "true") return true;
  if (entry->value == "false") return false;
  r.fail(key, "expected true or false, got '" + entry->value + "'");
}

inline std::vector<double> read_real_list(SectionReader& r, const std::string& key, double lo, double hi,
                                          bool lo_open) {
  const Entry& entry = r.require(key);
  const auto items = split_list(entry.value);
  if (items.empty()) r.fail(key, "expected a non-empty list");
  std::vector<double> out;
  for (auto item : items) {
    const auto v = parse_real(item);
    if (!v) r.fail(key, "expected a real number, got '" + std::string(item) + "'");
    if ((lo_open ? !(*v > lo) : !(*v >= lo)) || *v > hi) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "value " << *v << " outside " << (lo_open ? '(' : '[') << lo << ", " << hi << ']';
      r.fail(key, msg.str());
    }
    out.push_back(*v);
  }
  return out;
}

inline std::vector<std::size_t> read_count_list(SectionReader& r, const std::string& key, std::uint64_t lo,
                                                std::uint64_t hi) {
  const Entry& entry = r.require(key);
  const auto items = split_list(entry.value);
  if (items.empty()) r.fail(key, "expected a non-empty list");
  std::vector<std::size_t> out;
  for (auto item : items) {
    const auto v = parse_unsigned(item);
    if (!v) r.fail(key, "expected a non-negative integer, got '" + std::string(item) + "'");
    if (*v < lo || *v > hi)
      r.fail(key, "value " + std::to_string(*v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

inline constexpr std::uint64_t kMaxDimension = 100000;
inline constexpr std::uint64_t kMaxReplicas = 1000000;

}  // namespace detail

/// Parses and validates a configuration document.
inline RunConfig parse_config(std::string_view text) {
  using namespace detail;
  auto sections = tokenize(text);
  auto section_ptr = [&](const std::string& name) -> const Section* {
    const auto it = sections.find(name);
    return it == sections.end() ? nullptr : &it->second;
  };

  RunConfig cfg;
  SectionReader top("", section_ptr(""));
  cfg.schema_version = static_cast<int>(read_unsigned(top, "schema_version", 0, 1000000));
  if (cfg.schema_version != kSchemaVersion) {
    top.fail("schema_version", "unsupported version " + std::to_string(cfg.schema_version) + " (this build reads " +
                                   std::to_string(kSchemaVersion) + ")");
  }
  cfg.command = top.require("command").value;
  const auto& cmds = known_commands();
  if (std::find(cmds.begin(), cmds.end(), cfg.command) == cmds.end())
    top.fail("command", "unknown command '" + cfg.command + "'");
  top.reject_unknown();

  for (const auto& [name, section] : sections) {
    if (name.empty() || name == "ensemble" || name == "output" || name == cfg.command) continue;
    throw ConfigError("section [" + name + "] does not apply to command '" + cfg.command + "'", section.line);
  }

  // Ensemble.
  SectionReader ens("ensemble", section_ptr("ensemble"));
  const bool edges = cfg.command == "edges";
  cfg.ensemble.base_seed = read_unsigned(ens, "seed", 0, UINT64_MAX, std::uint64_t{0});
  if (const auto law = ens.optional("law")) {
    try {
      cfg.ensemble.law = parse_entry_law(law->value);
    } catch (const ConfigError& e) {
      ens.fail("law", e.what());
    }
  }
  if (ens.has("p") && ens.has("xi")) ens.fail("xi", "give either p or xi, not both");
  if (edges) {
    if (ens.has("n") || ens.has("p")) ens.fail(ens.has("n") ? "n" : "p", "edges takes its sizes from edges.n_grid");
    cfg.xi = read_real(ens, "xi", 0.0, 1.0, true, false);
  } else {
    cfg.ensemble.n = read_unsigned(ens, "n", 1, kMaxDimension);
    if (ens.has("p")) {
      cfg.ensemble.p = read_unsigned(ens, "p", 1, cfg.ensemble.n);
    } else {
      const double xi = read_real(ens, "xi", 0.0, 1.0, true, false);
      const auto p = static_cast<std::size_t>(std::llround(xi * static_cast<double>(cfg.ensemble.n)));
      if (p < 1) ens.fail("xi", "xi * n rounds to p = 0");
      cfg.ensemble.p = p;
    }
    cfg.xi = cfg.ensemble.xi();
  }
  ens.reject_unknown();

  // Output.
  SectionReader out("output", section_ptr("output"));
  if (const auto dir = out.optional("dir")) cfg.output.dir = dir->value;
  if (const auto fmt = out.optional("format")) {
    if (fmt->value == "csv") cfg.output.format = OutputFormat::csv;
    else if (fmt->value == "json") cfg.output.format = OutputFormat::json;
    else if (fmt->value == "both") cfg.output.format = OutputFormat::both;
    else out.fail("format", "expected csv, json or both, got '" + fmt->value + "'");
  }
  cfg.output.plot = read_bool(out, "plot", true);
  cfg.output.threads = static_cast<unsigned>(read_unsigned(out, "threads", 0, 1024, std::uint64_t{0}));
  out.reject_unknown();

  // Command parameters.
  SectionReader cmd(cfg.command, section_ptr(cfg.command));
  const std::uint64_t np = static_cast<std::uint64_t>(cfg.ensemble.n) * cfg.ensemble.p;
  if (cfg.command == "mp") {
    cfg.mp.points = read_unsigned(cmd, "points", 2, 1000000, std::uint64_t{400});
    cfg.mp.eta = read_real(cmd, "eta", 0.0, 3.0, true, true, 0.01);
    cfg.mp.samples = read_unsigned(cmd, "samples", 0, kMaxReplicas, std::uint64_t{0});
    cfg.mp.bins = read_unsigned(cmd, "bins", 1, 10000, std::uint64_t{40});
  } else if (cfg.command == "sweep") {
    cfg.sweep.alphas = read_real_list(cmd, "alphas", 0.0, 2.0, true);
    cfg.sweep.replicas = read_unsigned(cmd, "replicas", 1, kMaxReplicas);
  } else if (cfg.command == "varformula") {
    if (np > 10000) ens.fail("n", "varformula needs n * p <= 10000 (got " + std::to_string(np) + ")");
    if (const auto stat = cmd.optional("statistic")) {
      try {
        cfg.varformula.statistic = parse_statistic(stat->value);
      } catch (const ConfigError& e) {
        cmd.fail("statistic", e.what());
      }
    }
    cfg.varformula.samples = read_unsigned(cmd, "samples", 2, 100000000);
    if (cmd.has("k_list")) cfg.varformula.k_list = read_count_list(cmd, "k_list", 1, np);
    else cmd.optional("k_list");
  } else if (cfg.command == "locallaw") {
    const auto energies = read_real_list(cmd, "energy", -1e6, 1e6, false);
    const auto etas = read_real_list(cmd, "eta", 0.0, 3.0, true);
    if (energies.size() != etas.size()) cmd.fail("eta", "energy and eta lists must have equal length");
    for (std::size_t i = 0; i < etas.size(); ++i) {
      if (!(etas[i] < 3.0)) cmd.fail("eta", "eta must be below 3");
      cfg.locallaw.z.push_back({energies[i], etas[i]});
    }
    cfg.locallaw.replicas = read_unsigned(cmd, "replicas", 1, kMaxReplicas);
    cfg.locallaw.epsilon = read_real(cmd, "epsilon", 0.0, 0.5, false, true, 0.0);
  } else if (cfg.command == "perturb") {
    cfg.perturb.samples = read_unsigned(cmd, "samples", 1, np);
    cfg.perturb.delta = read_real(cmd, "delta", 0.0, 0.5, true, true, 0.25);
  } else if (cfg.command == "stability") {
    if (cmd.has("k") && cmd.has("alpha")) cmd.fail("alpha", "give either k or alpha, not both");
    if (cmd.has("alpha")) {
      const double alpha = read_real(cmd, "alpha", 0.0, 2.0, true, false);
      cfg.stability.k = resample_count(cfg.ensemble.n, cfg.ensemble.p, alpha);
      cmd.optional("k");
    } else {
      cfg.stability.k = read_unsigned(cmd, "k", 0, np);
      cmd.optional("alpha");
    }
    cfg.stability.replicas = read_unsigned(cmd, "replicas", 1, kMaxReplicas);
    cfg.stability.eta_delta = read_real(cmd, "eta_delta", 0.0, 1.0 / 3.0, true, true, 0.05);
    cfg.stability.cross_probe = read_bool(cmd, "cross_probe", true);
  } else if (cfg.command == "edges") {
    cfg.edges.n_grid = read_count_list(cmd, "n_grid", 2, kMaxDimension);
    if (cfg.edges.n_grid.size() < 3) cmd.fail("n_grid", "needs at least 3 sizes for the regression");
    for (std::size_t i = 0; i + 1 < cfg.edges.n_grid.size(); ++i)
      if (cfg.edges.n_grid[i] >= cfg.edges.n_grid[i + 1]) cmd.fail("n_grid", "sizes must be strictly ascending");
    cfg.edges.replicas = read_unsigned(cmd, "replicas", 4, kMaxReplicas);
  }
  cmd.reject_unknown();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

namespace detail {

inline std::string format_real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt(xs[i]);
  }
  return out + "]";
}

}  // namespace detail

/// Canonical single-line rendering of the effective configuration, with
/// every default made explicit. Used as the config echo in output metadata.
inline std::string config_echo(const RunConfig& c) {
  using detail::format_real;
  auto count = [](std::size_t v) { return std::to_string(v); };
  std::string s = "schema_version=" + std::to_string(c.schema_version) + "; command=" + c.command;
  if (c.command != "edges") s += "; ensemble.n=" + count(c.ensemble.n) + "; ensemble.p=" + count(c.ensemble.p);
  s += "; ensemble.xi=" + format_real(c.xi);
  s += "; ensemble.law=" + std::string(to_string(c.ensemble.law));
  s += "; ensemble.seed=" + std::to_string(c.ensemble.base_seed);
  if (c.command == "mp") {
    s += "; mp.points=" + count(c.mp.points) + "; mp.eta=" + format_real(c.mp.eta) +
         "; mp.samples=" + count(c.mp.samples) + "; mp.bins=" + count(c.mp.bins);
  } else if (c.command == "sweep") {
    s += "; sweep.alphas=" + detail::join(c.sweep.alphas, format_real) + "; sweep.replicas=" + count(c.sweep.replicas);
  } else if (c.command == "varformula") {
    s += "; varformula.statistic=" + std::string(to_string(c.varformula.statistic)) +
         "; varformula.samples=" + count(c.varformula.samples) +
         "; varformula.k_list=" + detail::join(c.varformula.k_list, count);
  } else if (c.command == "locallaw") {
    std::vector<double> es, etas;
    for (const auto& z : c.locallaw.z) {
      es.push_back(z.E);
      etas.push_back(z.eta);
    }
    s += "; locallaw.energy=" + detail::join(es, format_real) + "; locallaw.eta=" + detail::join(etas, format_real) +
         "; locallaw.replicas=" + count(c.locallaw.replicas) + "; locallaw.epsilon=" + format_real(c.locallaw.epsilon);
  } else if (c.command == "perturb") {
    s += "; perturb.samples=" + count(c.perturb.samples) + "; perturb.delta=" + format_real(c.perturb.delta);
  } else if (c.command == "stability") {
    s += "; stability.k=" + count(c.stability.k) + "; stability.replicas=" + count(c.stability.replicas) +
         "; stability.eta_delta=" + format_real(c.stability.eta_delta) +
         "; stability.cross_probe=" + (c.stability.cross_probe ? "true" : "false");
  } else if (c.command == "edges") {
    s += "; edges.n_grid=" + detail::join(c.edges.n_grid, count) + "; edges.replicas=" + count(c.edges.replicas);
  }
  return s;
}

}  // namespace rspca
