#pragma once

// Deterministic SVG plots of result tables. Output bytes depend only on the
// table contents: coordinates are printed with fixed precision and no
// timestamps or random identifiers are emitted.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "rspca/errors.hpp"
#include "rspca/mp.hpp"
#include "rspca/table.hpp"

namespace rspca {

enum class PlotKind { transition_curve, scaling_fit, density_overlay };

[[nodiscard]] inline std::string_view to_string(PlotKind k) noexcept {
  switch (k) {
    case PlotKind::transition_curve: return "transition_curve";
    case PlotKind::scaling_fit: return "scaling_fit";
    case PlotKind::density_overlay: return "density_overlay";
  }
  return "unknown";
}

[[nodiscard]] inline PlotKind parse_plot_kind(std::string_view s) {
  if (s == "transition_curve") return PlotKind::transition_curve;
  if (s == "scaling_fit") return PlotKind::scaling_fit;
  if (s == "density_overlay") return PlotKind::density_overlay;
  throw SchemaError("unknown plot kind '" + std::string(s) + "'");
}

/// Columns each plot kind reads from its table.
[[nodiscard]] inline std::vector<std::string> required_columns(PlotKind k) {
  switch (k) {
    case PlotKind::transition_curve: return {"alpha", "mean_inner_v", "se_inner_v"};
    case PlotKind::scaling_fit: return {"n", "var_lambda1", "se_var_lambda1"};
    case PlotKind::density_overlay: return {"x", "density"};
  }
  return {};
}

/// Number of samples in the analytic density overlay.
inline constexpr std::size_t kOverlaySamples = 2000;

/// (x, rho(x)) samples of the density on a grid uniform in the angle of
/// x = lambda_- + 2r cos^2(theta / 2), ascending in x. At xi = 1 the
/// point x = 0 is omitted because the density diverges there.
[[nodiscard]] inline std::vector<std::pair<double, double>> density_overlay_samples(
    const MPModel& model, std::size_t samples = kOverlaySamples) {
  std::vector<std::pair<double, double>> out;
  out.reserve(samples + 1);
  for (std::size_t j = samples + 1; j-- > 0;) {
    const double theta = std::numbers::pi * static_cast<double>(j) / static_cast<double>(samples);
    const double x = j == 0 ? model.lambda_plus() : detail::mp_position(model, theta);
    if (!(x > 0.0)) continue;
    out.emplace_back(x, j == 0 || j == samples ? 0.0 : mp_density(model, x));
  }
  return out;
}

namespace detail {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;
  double pixel_lo = 0.0;
  double pixel_hi = 1.0;

  [[nodiscard]] double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

inline std::string num(double v, int decimals = 2) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string label(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline Axis make_axis(double lo, double hi, bool log, double pixel_lo, double pixel_hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = log ? 1.0 : 0.0;
    hi = log ? 10.0 : 1.0;
  }
  if (log) {
    lo = std::max(lo, std::numeric_limits<double>::min());
    hi = std::max(hi, lo);
    if (hi <= lo) hi = lo * 10.0;
    const double pad = std::pow(hi / lo, 0.05);
    return {lo / pad, hi * pad, true, pixel_lo, pixel_hi};
  }
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, false, pixel_lo, pixel_hi};
}

class SvgCanvas {
 public:
  static constexpr double kWidth = 640.0;
  static constexpr double kHeight = 420.0;
  static constexpr double kLeft = 70.0;
  static constexpr double kRight = 20.0;
  static constexpr double kTop = 40.0;
  static constexpr double kBottom = 50.0;

  SvgCanvas(std::string_view title, std::string_view plot_kind) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth, 0) + "\" height=\"" +
             num(kHeight, 0) + "\" viewBox=\"0 0 " + num(kWidth, 0) + " " + num(kHeight, 0) +
             "\" data-plot-kind=\"" + std::string(plot_kind) + "\">\n";
    body_ += "<defs><clipPath id=\"plot-area\"><rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
             num(kWidth - kLeft - kRight) + "\" height=\"" + num(kHeight - kTop - kBottom) +
             "\"/></clipPath></defs>\n";
    body_ += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth, 0) + "\" height=\"" + num(kHeight, 0) +
             "\" fill=\"white\"/>\n";
    body_ += "<text x=\"" + num(kWidth / 2) + "\" y=\"24.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"15\">" + xml_escape(title) + "</text>\n";
  }

  [[nodiscard]] static Axis x_axis(double lo, double hi, bool log) { return make_axis(lo, hi, log, kLeft, kWidth - kRight); }
  [[nodiscard]] static Axis y_axis(double lo, double hi, bool log) {
    return make_axis(lo, hi, log, kHeight - kBottom, kTop);
  }

  void axes(const Axis& x, const Axis& y, std::string_view x_label, std::string_view y_label) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    body_ += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    body_ += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\"/>\n";
    body_ += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/>\n";
    body_ += "</g>\n<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (double v : ticks(x)) {
      const double px = x.map(v);
      body_ += "<line x1=\"" + num(px) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px) + "\" y2=\"" + num(y0 + 5) +
               "\" stroke=\"black\"/>";
      body_ += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + 18) + "\" text-anchor=\"middle\">" + label(v) + "</text>\n";
    }
    for (double v : ticks(y)) {
      const double py = y.map(v);
      body_ += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(py) +
               "\" stroke=\"black\"/>";
      body_ += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" + label(v) + "</text>\n";
    }
    body_ += "</g>\n";
    body_ += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 12) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + xml_escape(x_label) +
             (x.log ? " (log)" : "") + "</text>\n";
    body_ += "<text x=\"16.00\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"13\" transform=\"rotate(-90 16.00 " + num((y0 + y1) / 2) + ")\">" + xml_escape(y_label) +
             (y.log ? " (log)" : "") + "</text>\n";
  }

  void points(const Axis& x, const Axis& y, const std::vector<double>& xs, const std::vector<double>& ys,
              const std::vector<double>* errors) {
    body_ += "<g class=\"data\" clip-path=\"url(#plot-area)\">\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
      if ((x.log && xs[i] <= 0) || (y.log && ys[i] <= 0)) continue;
      const double px = x.map(xs[i]);
      const double py = y.map(ys[i]);
      if (errors != nullptr && std::isfinite((*errors)[i])) {
        double lo = ys[i] - (*errors)[i];
        const double hi = ys[i] + (*errors)[i];
        if (y.log && lo <= 0) lo = y.lo;
        body_ += "<line class=\"error-bar\" x1=\"" + num(px) + "\" y1=\"" + num(y.map(lo)) + "\" x2=\"" + num(px) +
                 "\" y2=\"" + num(y.map(hi)) + "\" stroke=\"#1f4e99\" stroke-width=\"1.2\"/>\n";
      }
      body_ += "<circle class=\"point\" cx=\"" + num(px) + "\" cy=\"" + num(py) +
               "\" r=\"3.5\" fill=\"#1f4e99\"/>\n";
    }
    body_ += "</g>\n";
  }

  void polyline(const Axis& x, const Axis& y, const std::vector<std::pair<double, double>>& samples,
                std::string_view css_class, std::string_view colour) {
    std::string pts, raw;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto [vx, vy] = samples[i];
      if ((x.log && vx <= 0) || (y.log && vy <= 0)) continue;
      const double py = std::clamp(y.map(vy), -10.0 * kHeight, 10.0 * kHeight);
      if (!pts.empty()) pts += ' ';
      pts += num(x.map(vx)) + "," + num(py);
      if (!raw.empty()) raw += ' ';
      raw += format_double(vx) + "," + format_double(vy);
    }
    body_ += "<polyline class=\"" + std::string(css_class) + "\" clip-path=\"url(#plot-area)\" fill=\"none\" stroke=\"" +
             std::string(colour) + "\" stroke-width=\"1.5\" points=\"" + pts + "\" data-points=\"" + raw + "\"/>\n";
  }

  [[nodiscard]] std::string finish() && { return std::move(body_) + "</svg>\n"; }

 private:
  static std::vector<double> ticks(const Axis& a) {
    std::vector<double> out;
    if (a.log) {
      const int first = static_cast<int>(std::ceil(std::log10(a.lo)));
      const int last = static_cast<int>(std::floor(std::log10(a.hi)));
      if (last >= first) {
        for (int e = first; e <= last; ++e) out.push_back(std::pow(10.0, e));
        return out;
      }
      for (int i = 1; i <= 3; ++i)
        out.push_back(std::pow(10.0, std::log10(a.lo) + i * (std::log10(a.hi) - std::log10(a.lo)) / 4.0));
      return out;
    }
    const double span = a.hi - a.lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
    for (double v = std::ceil(a.lo / step) * step; v <= a.hi + 1e-9 * step; v += step)
      out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
  }

  std::string body_;
};

inline void require_columns(const ResultTable& t, PlotKind kind) {
  std::string missing;
  for (const auto& c : required_columns(kind)) {
    if (!t.has_column(c)) missing += (missing.empty() ? "" : ", ") + c;
  }
  if (!missing.empty()) {
    throw SchemaError("table '" + t.name + "' cannot be drawn as " + std::string(to_string(kind)) +
                      ": missing column(s) " + missing);
  }
}

inline std::pair<double, double> finite_range(const std::vector<double>& v, const std::vector<double>* err = nullptr,
                                              bool positive = false) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || (positive && v[i] <= 0)) continue;
    const double e = err != nullptr && std::isfinite((*err)[i]) ? (*err)[i] : 0.0;
    lo = std::min(lo, positive && v[i] - e <= 0 ? v[i] : v[i] - e);
    hi = std::max(hi, v[i] + e);
  }
  return {lo, hi};
}

}  // namespace detail

/// Renders `table` as an SVG document of the given kind.
[[nodiscard]] inline std::string render_plot(const ResultTable& table, PlotKind kind) {
  detail::require_columns(table, kind);
  using detail::SvgCanvas;
  switch (kind) {
    case PlotKind::transition_curve: {
      const auto xs = table.numeric_column("alpha");
      const auto ys = table.numeric_column("mean_inner_v");
      const auto se = table.numeric_column("se_inner_v");
      const auto [xlo, xhi] = detail::finite_range(xs);
      auto [ylo, yhi] = detail::finite_range(ys, &se);
      ylo = std::min(ylo, 0.0);
      yhi = std::max(yhi, 1.0);
      SvgCanvas svg("Top eigenvector overlap against resampling exponent", to_string(kind));
      const auto x = SvgCanvas::x_axis(xlo, xhi, false);
      const auto y = SvgCanvas::y_axis(ylo, yhi, false);
      svg.axes(x, y, "alpha = log k / log n", "mean |<v, v_k>|");
      svg.points(x, y, xs, ys, &se);
      return std::move(svg).finish();
    }
    case PlotKind::scaling_fit: {
      const auto xs = table.numeric_column("n");
      const auto ys = table.numeric_column("var_lambda1");
      const auto se = table.numeric_column("se_var_lambda1");
      const auto [xlo, xhi] = detail::finite_range(xs, nullptr, true);
      const auto [ylo, yhi] = detail::finite_range(ys, &se, true);
      SvgCanvas svg("Variance of the top eigenvalue against n", to_string(kind));
      const auto x = SvgCanvas::x_axis(xlo, xhi, true);
      const auto y = SvgCanvas::y_axis(ylo, yhi, true);
      svg.axes(x, y, "n", "Var(lambda_1)");
      svg.points(x, y, xs, ys, &se);
      const std::string* slope = table.find_meta("fit_slope");
      const std::string* intercept = table.find_meta("fit_intercept");
      if (slope != nullptr && intercept != nullptr) {
        const double b = parse_double(*slope);
        const double a = parse_double(*intercept);
        std::vector<std::pair<double, double>> line;
        for (double n : {xlo, xhi}) line.emplace_back(n, std::exp(a + b * std::log(n)));
        svg.polyline(x, y, line, "fit", "#b03020");
      }
      return std::move(svg).finish();
    }
    case PlotKind::density_overlay: {
      const std::string* xi_text = table.find_meta("xi");
      if (xi_text == nullptr) throw SchemaError("table '" + table.name + "' lacks the 'xi' metadata entry");
      const MPModel model(parse_double(*xi_text));
      const auto xs = table.numeric_column("x");
      const auto ys = table.numeric_column("density");
      const auto overlay = density_overlay_samples(model);
      auto [xlo, xhi] = detail::finite_range(xs);
      xlo = std::min(xlo, 0.0);
      xhi = std::max(xhi, model.lambda_plus());
      // The vertical range follows the table; the overlay is clipped.
      auto [ylo, yhi] = detail::finite_range(ys);
      double peak = 0.0;
      for (const auto& [ox, oy] : overlay)
        if (ox > model.lambda_minus() + 0.05 * (model.lambda_plus() - model.lambda_minus())) peak = std::max(peak, oy);
      ylo = 0.0;
      yhi = std::max({std::isfinite(yhi) ? yhi : 0.0, 1.2 * peak, 1e-3});
      SvgCanvas svg("Spectral density against the limiting law (xi = " + detail::label(model.xi()) + ")",
                    to_string(kind));
      const auto x = SvgCanvas::x_axis(xlo, xhi, false);
      const auto y = SvgCanvas::y_axis(ylo, yhi, false);
      svg.axes(x, y, "x", "density");
      svg.points(x, y, xs, ys, nullptr);
      svg.polyline(x, y, overlay, "mp-overlay", "#b03020");
      return std::move(svg).finish();
    }
  }
  throw SchemaError("unknown plot kind");
}

inline void emit_plot(const ResultTable& table, PlotKind kind, const std::filesystem::path& path) {
  write_file_atomic(path, render_plot(table, kind));
}

}  // namespace rspca
