#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace bkgarch {

enum class PlotKind { loglog_rate, ratio, diagnostics };

PlotKind parse_plot_kind(const std::string& name);
std::string to_string(PlotKind kind);

struct PlotSpec {
  std::filesystem::path input;   // summary.json
  PlotKind kind = PlotKind::loglog_rate;
  bool reference_slope = true;   // dashed line of slope -1/4
  std::string statistic = "r_general";
  std::filesystem::path output;  // .svg
};

/// Standalone SVG for a summary. Needs at least two n values. Output is a
/// pure function of the inputs.
std::string render_svg(const nlohmann::json& summary, PlotKind kind, bool reference_slope,
                       const std::string& statistic);

/// Reads the summary, renders and writes the figure atomically.
void plot(const PlotSpec& spec);

}  // namespace bkgarch
