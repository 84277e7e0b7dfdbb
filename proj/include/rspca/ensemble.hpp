#pragma once

// Random data matrices with i.i.d. centred unit-variance entries, scaled by
// n^{-1/2}, and coupled copies in which a uniformly random set of k entries
// is redrawn.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "rspca/errors.hpp"
#include "rspca/rng.hpp"

namespace rspca {

enum class EntryLaw { gaussian, rademacher, symmetrized_exponential };

[[nodiscard]] inline std::string_view to_string(EntryLaw law) noexcept {
  switch (law) {
    case EntryLaw::gaussian: return "gaussian";
    case EntryLaw::rademacher: return "rademacher";
    case EntryLaw::symmetrized_exponential: return "symmetrized_exponential";
  }
  return "unknown";
}

[[nodiscard]] inline EntryLaw parse_entry_law(std::string_view name) {
  if (name == "gaussian") return EntryLaw::gaussian;
  if (name == "rademacher") return EntryLaw::rademacher;
  if (name == "symmetrized_exponential") return EntryLaw::symmetrized_exponential;
  throw ConfigError("unknown entry law '" + std::string(name) +
                    "' (expected gaussian, rademacher or symmetrized_exponential)");
}

/// E[x^4] of the unit-variance law; the variance is 1 for every law.
[[nodiscard]] constexpr double fourth_moment(EntryLaw law) noexcept {
  switch (law) {
    case EntryLaw::gaussian: return 3.0;
    case EntryLaw::rademacher: return 1.0;
    case EntryLaw::symmetrized_exponential: return 6.0;  // 4!/2^2
  }
  return 0.0;
}

/// One unscaled draw: mean 0, variance 1.
inline double draw_entry(EntryLaw law, RngStream& stream) {
  switch (law) {
    case EntryLaw::gaussian: return stream.normal();
    case EntryLaw::rademacher: return stream.coin() ? 1.0 : -1.0;
    case EntryLaw::symmetrized_exponential: {
      const double magnitude = stream.exponential() * (1.0 / std::sqrt(2.0));
      return stream.coin() ? magnitude : -magnitude;
    }
  }
  return 0.0;
}

struct EnsembleConfig {
  std::size_t n = 0;  // samples (rows)
  std::size_t p = 0;  // features (columns)
  EntryLaw law = EntryLaw::gaussian;
  std::uint64_t base_seed = 0;

  [[nodiscard]] double xi() const noexcept {
    return static_cast<double>(p) / static_cast<double>(n);
  }
  [[nodiscard]] double scale() const noexcept { return 1.0 / std::sqrt(static_cast<double>(n)); }
  [[nodiscard]] std::size_t entry_count() const noexcept { return n * p; }

  void validate() const {
    if (n == 0 || p == 0)
      throw ConfigError("ensemble dimensions must be positive (n=" + std::to_string(n) +
                        ", p=" + std::to_string(p) + ")");
    if (p > n)
      throw ConfigError("ensemble requires p <= n (n=" + std::to_string(n) +
                        ", p=" + std::to_string(p) + ")");
  }
};

/// Data matrix X (n x p). Remembers its entry law and scale so fresh
/// entries can be drawn from the same distribution.
struct DataMatrix {
  Eigen::MatrixXd entries;
  EntryLaw law = EntryLaw::gaussian;
  double scale = 1.0;

  [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(entries.rows()); }
  [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(entries.cols()); }
  [[nodiscard]] double operator()(std::size_t i, std::size_t a) const {
    return entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
  }

  [[nodiscard]] double fresh_entry(RngStream& stream) const { return scale * draw_entry(law, stream); }

  /// Wraps explicit entries (no scaling applied). Fresh draws use `scale`.
  [[nodiscard]] static DataMatrix from_entries(Eigen::MatrixXd values,
                                               EntryLaw law = EntryLaw::gaussian,
                                               double scale = 1.0) {
    return DataMatrix{std::move(values), law, scale};
  }
};

/// 0-based (row, column) index of one matrix entry.
struct EntryIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const EntryIndex&, const EntryIndex&) = default;
  friend auto operator<=>(const EntryIndex&, const EntryIndex&) = default;
};

/// A set of k distinct entry positions, drawn uniformly among all
/// C(np, k) subsets.
struct ResamplePlan {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<EntryIndex> pairs;

  [[nodiscard]] std::size_t k() const noexcept { return pairs.size(); }
};

struct CoupledPair {
  DataMatrix base;
  ResamplePlan plan;
  DataMatrix resampled;
};

inline DataMatrix sample_matrix(const EnsembleConfig& config, RngStream& stream) {
  config.validate();
  DataMatrix x{Eigen::MatrixXd(static_cast<Eigen::Index>(config.n), static_cast<Eigen::Index>(config.p)),
               config.law, config.scale()};
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index a = 0; a < x.entries.cols(); ++a)
    for (Eigen::Index i = 0; i < x.entries.rows(); ++i) x.entries(i, a) = x.fresh_entry(stream);
  return x;
}

/// Uniform k-subset of the np entry positions without an np-sized buffer
/// when k is small: Floyd's algorithm for k <= np/2, partial Fisher-Yates
/// otherwise (then np < 2k, so the buffer is O(k)).
inline ResamplePlan draw_resample_plan(std::size_t n, std::size_t p, std::size_t k, RngStream& stream) {
  const std::uint64_t total = static_cast<std::uint64_t>(n) * p;
  if (k > total)
    throw RangeError("resample count k=" + std::to_string(k) + " exceeds np=" + std::to_string(total));
  ResamplePlan plan{n, p, {}};
  plan.pairs.reserve(k);
  auto to_index = [p](std::uint64_t linear) {
    return EntryIndex{static_cast<std::size_t>(linear / p), static_cast<std::size_t>(linear % p)};
  };

  if (2 * static_cast<std::uint64_t>(k) <= total) {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(k * 2);
    for (std::uint64_t j = total - k; j < total; ++j) {
      const std::uint64_t t = stream.uniform_index(0, j);
      const std::uint64_t pick = chosen.insert(t).second ? t : j;
      if (pick == j) chosen.insert(j);
      plan.pairs.push_back(to_index(pick));
    }
  } else {
    std::vector<std::uint64_t> slots(total);
    std::iota(slots.begin(), slots.end(), std::uint64_t{0});
    for (std::uint64_t i = 0; i < k; ++i) {
      const std::uint64_t j = stream.uniform_index(i, total - 1);
      std::swap(slots[i], slots[j]);
      plan.pairs.push_back(to_index(slots[i]));
    }
  }
  return plan;
}

inline CoupledPair apply_plan(DataMatrix base, ResamplePlan plan, RngStream& stream) {
  if (plan.n != base.rows() || plan.p != base.cols())
    throw ShapeError("resample plan is for a " + std::to_string(plan.n) + "x" + std::to_string(plan.p) +
                     " matrix but base is " + std::to_string(base.rows()) + "x" +
                     std::to_string(base.cols()));
  DataMatrix resampled = base;
  for (const auto& [i, a] : plan.pairs) {
    if (i >= base.rows() || a >= base.cols())
      throw ShapeError("resample plan index (" + std::to_string(i) + ", " + std::to_string(a) +
                       ") outside the matrix");
    resampled.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
        base.fresh_entry(stream);
  }
  return CoupledPair{std::move(base), std::move(plan), std::move(resampled)};
}

/// Copy of `base` with entry (i, a) redrawn independently.
inline DataMatrix single_entry_variant(const DataMatrix& base, std::size_t i, std::size_t a,
                                       RngStream& stream) {
  if (i >= base.rows() || a >= base.cols())
    throw RangeError("entry (" + std::to_string(i) + ", " + std::to_string(a) + ") outside a " +
                     std::to_string(base.rows()) + "x" + std::to_string(base.cols()) + " matrix");
  DataMatrix out = base;
  out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = base.fresh_entry(stream);
  return out;
}

}  // namespace rspca
