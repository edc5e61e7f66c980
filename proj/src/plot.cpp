#include "bkgarch/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "bkgarch/bahadur.hpp"
#include "bkgarch/error.hpp"
#include "bkgarch/harness.hpp"

namespace bkgarch {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kLeft = 80;
constexpr double kRight = 30;
constexpr double kTop = 40;
constexpr double kBottom = 60;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;  // (n, value)
};

// Log-log canvas: x is log2 n, y is log10 value.
class Canvas {
 public:
  Canvas(double x_lo, double x_hi, double y_lo, double y_hi)
      : x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi) {}

  double px(double n) const {
    return kLeft + (std::log2(n) - x_lo_) / (x_hi_ - x_lo_) * (kWidth - kLeft - kRight);
  }
  double py(double v) const {
    return kHeight - kBottom -
           (std::log10(v) - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom);
  }

  void axes(const std::string& title, const std::string& ylabel) {
    out_ += "<rect x=\"" + fmt("%.3f", kLeft) + "\" y=\"" + fmt("%.3f", kTop) + "\" width=\"" +
            fmt("%.3f", kWidth - kLeft - kRight) + "\" height=\"" +
            fmt("%.3f", kHeight - kTop - kBottom) +
            "\" fill=\"none\" stroke=\"black\" class=\"axes\"/>\n";
    for (double e = std::ceil(x_lo_); e <= x_hi_ + 1e-9; e += 1.0) {
      const double x = px(std::exp2(e));
      out_ += "<line x1=\"" + fmt("%.3f", x) + "\" y1=\"" + fmt("%.3f", kHeight - kBottom) +
              "\" x2=\"" + fmt("%.3f", x) + "\" y2=\"" + fmt("%.3f", kHeight - kBottom + 5) +
              "\" stroke=\"black\"/>\n";
      out_ += "<text x=\"" + fmt("%.3f", x) + "\" y=\"" + fmt("%.3f", kHeight - kBottom + 20) +
              "\" font-size=\"12\" text-anchor=\"middle\">2^" + fmt("%.0f", e) + "</text>\n";
    }
    for (double e = std::ceil(y_lo_ * 4) / 4; e <= y_hi_ + 1e-9; e += 0.25) {
      const double y = py(std::pow(10.0, e));
      out_ += "<line x1=\"" + fmt("%.3f", kLeft - 5) + "\" y1=\"" + fmt("%.3f", y) + "\" x2=\"" +
              fmt("%.3f", kLeft) + "\" y2=\"" + fmt("%.3f", y) + "\" stroke=\"black\"/>\n";
      out_ += "<text x=\"" + fmt("%.3f", kLeft - 8) + "\" y=\"" + fmt("%.3f", y + 4) +
              "\" font-size=\"11\" text-anchor=\"end\">" + fmt("%.3g", std::pow(10.0, e)) +
              "</text>\n";
    }
    out_ += "<text x=\"" + fmt("%.3f", kWidth / 2) + "\" y=\"24\" font-size=\"15\" " +
            "text-anchor=\"middle\">" + title + "</text>\n";
    out_ += "<text x=\"" + fmt("%.3f", kWidth / 2) + "\" y=\"" + fmt("%.3f", kHeight - 15) +
            "\" font-size=\"13\" text-anchor=\"middle\">n</text>\n";
    out_ += "<text x=\"18\" y=\"" + fmt("%.3f", kHeight / 2) +
            "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
            fmt("%.3f", kHeight / 2) + ")\">" + ylabel + "</text>\n";
  }

  void markers(const Series& s) {
    for (const auto& [n, v] : s.points) {
      out_ += "<circle class=\"marker\" cx=\"" + fmt("%.3f", px(n)) + "\" cy=\"" +
              fmt("%.3f", py(v)) + "\" r=\"4\" fill=\"" + s.color + "\"/>\n";
    }
  }

  void polyline(const Series& s) {
    out_ += "<polyline class=\"series\" fill=\"none\" stroke=\"" + s.color + "\" points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      out_ += (i ? " " : "") + fmt("%.3f", px(s.points[i].first)) + "," +
              fmt("%.3f", py(s.points[i].second));
    }
    out_ += "\"/>\n";
  }

  void segment(const std::string& cls, double n0, double v0, double n1, double v1,
               const std::string& style) {
    out_ += "<line class=\"" + cls + "\" x1=\"" + fmt("%.3f", px(n0)) + "\" y1=\"" +
            fmt("%.3f", py(v0)) + "\" x2=\"" + fmt("%.3f", px(n1)) + "\" y2=\"" +
            fmt("%.3f", py(v1)) + "\" " + style + "/>\n";
  }

  void text(const std::string& attr, double x, double y, const std::string& body) {
    out_ += "<text " + attr + " x=\"" + fmt("%.3f", x) + "\" y=\"" + fmt("%.3f", y) +
            "\" font-size=\"12\">" + body + "</text>\n";
  }

  std::string finish() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           fmt("%.0f", kWidth) + "\" height=\"" + fmt("%.0f", kHeight) + "\" viewBox=\"0 0 " +
           fmt("%.0f", kWidth) + " " + fmt("%.0f", kHeight) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + out_ + "</svg>\n";
  }

 private:
  double x_lo_, x_hi_, y_lo_, y_hi_;
  std::string out_;
};

Canvas make_canvas(const std::vector<Series>& series, double extra_lo = HUGE_VAL,
                   double extra_hi = -HUGE_VAL) {
  double nmin = HUGE_VAL, nmax = -HUGE_VAL, vmin = extra_lo, vmax = extra_hi;
  for (const auto& s : series) {
    for (const auto& [n, v] : s.points) {
      nmin = std::min(nmin, n);
      nmax = std::max(nmax, n);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  const double ylo = std::log10(vmin);
  const double yhi = std::log10(vmax);
  const double pad = std::max(0.1, 0.1 * (yhi - ylo));
  return Canvas(std::log2(nmin) - 0.5, std::log2(nmax) + 0.5, ylo - pad, yhi + pad);
}

double required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw IoError(std::string("summary is missing numeric field '") + key + "'");
  }
  return j[key].get<double>();
}

Series per_n_series(const nlohmann::json& summary, const std::string& label,
                    const std::string& color, auto&& value_of) {
  Series s{label, color, {}};
  for (const auto& entry : summary.at("per_n")) {
    const double n = required(entry, "n");
    const double v = value_of(entry);
    if (!(v > 0.0)) throw IoError("summary holds a nonpositive value for " + label);
    s.points.emplace_back(n, v);
  }
  return s;
}

}  // namespace

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "loglog-rate") return PlotKind::loglog_rate;
  if (name == "ratio") return PlotKind::ratio;
  if (name == "diagnostics") return PlotKind::diagnostics;
  throw InvalidArgument("unknown figure kind '" + name + "'");
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::loglog_rate:
      return "loglog-rate";
    case PlotKind::ratio:
      return "ratio";
    case PlotKind::diagnostics:
      return "diagnostics";
  }
  return "unknown";
}

std::string render_svg(const nlohmann::json& summary, PlotKind kind, bool reference_slope,
                       const std::string& statistic) {
  if (!summary.is_object() || !summary.contains("per_n") || !summary["per_n"].is_array()) {
    throw IoError("summary has no per_n table");
  }
  if (summary["per_n"].size() < 2) throw InvalidArgument("a figure needs at least two n values");
  auto median_of = [&](const std::string& stat) {
    return [stat](const nlohmann::json& e) {
      if (!e.contains(stat)) throw IoError("summary is missing statistic '" + stat + "'");
      return required(e[stat], "median");
    };
  };

  switch (kind) {
    case PlotKind::loglog_rate: {
      const Series s = per_n_series(summary, statistic, "#1f77b4", median_of(statistic));
      double slope;
      double intercept;
      if (summary.contains("fits") && summary["fits"].contains(statistic)) {
        slope = required(summary["fits"][statistic], "exponent");
        intercept = required(summary["fits"][statistic], "intercept");
      } else {
        std::vector<std::pair<std::size_t, double>> pts;
        for (const auto& [n, v] : s.points) pts.emplace_back(static_cast<std::size_t>(n), v);
        std::tie(slope, intercept) = fit_loglog(pts);
      }
      const double n0 = s.points.front().first;
      const double n1 = s.points.back().first;
      auto line = [&](double n) { return std::exp(intercept + slope * std::log(n)); };
      auto ref = [&](double n) { return s.points.front().second * std::pow(n / n0, -0.25); };
      double lo = std::min(line(n0), line(n1));
      double hi = std::max(line(n0), line(n1));
      if (reference_slope) {
        lo = std::min(lo, ref(n1));
        hi = std::max(hi, ref(n0));
      }
      Canvas c = make_canvas({s}, lo, hi);
      c.axes("median " + statistic + " vs n", "median " + statistic);
      c.segment("fit", n0, line(n0), n1, line(n1), "stroke=\"#d62728\" stroke-width=\"2\"");
      if (reference_slope) {
        c.segment("reference", n0, ref(n0), n1, ref(n1),
                  "stroke=\"gray\" stroke-dasharray=\"6,4\"");
      }
      c.markers(s);
      c.text("id=\"slope\"", kLeft + 12, kTop + 20, "fitted slope = " + fmt("%.8f", slope));
      if (reference_slope) c.text("id=\"reference-label\"", kLeft + 12, kTop + 38, "reference slope = -0.25");
      return c.finish();
    }
    case PlotKind::ratio: {
      const Series s = per_n_series(summary, statistic + " / r_n", "#1f77b4",
                                    [&](const nlohmann::json& e) {
                                      return median_of(statistic)(e) / required(e.at("rates"), "r_n");
                                    });
      Canvas c = make_canvas({s});
      c.axes("median " + statistic + " / r_n", "ratio");
      c.polyline(s);
      c.markers(s);
      return c.finish();
    }
    case PlotKind::diagnostics: {
      const std::vector<Series> all = {
          per_n_series(summary, "oscillation / b_n*", "#1f77b4",
                       [](const nlohmann::json& e) {
                         return required(e.at("ratios"), "oscillation_over_b_n_star");
                       }),
          per_n_series(summary, "oscillation / b_n", "#2ca02c",
                       [](const nlohmann::json& e) {
                         return required(e.at("ratios"), "oscillation_over_b_n");
                       }),
          per_n_series(summary, "lil", "#d62728", median_of("lil")),
      };
      Canvas c = make_canvas(all);
      c.axes("normalized diagnostics", "median value");
      double y = kTop + 20;
      for (const auto& s : all) {
        c.polyline(s);
        c.markers(s);
        c.text("class=\"legend\"", kWidth - kRight - 160, y, "<tspan fill=\"" + s.color + "\">&#9679;</tspan> " + s.label);
        y += 16;
      }
      return c.finish();
    }
  }
  throw InvalidArgument("unknown figure kind");
}

void plot(const PlotSpec& spec) {
  std::ifstream in(spec.input);
  if (!in) throw IoError("cannot open summary " + spec.input.string());
  nlohmann::json summary;
  try {
    in >> summary;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed summary " + spec.input.string() + ": " + e.what());
  }
  std::string svg;
  try {
    svg = render_svg(summary, spec.kind, spec.reference_slope, spec.statistic);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed summary " + spec.input.string() + ": " + e.what());
  }
  write_file_atomic(spec.output, svg);
}

}  // namespace bkgarch
