#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bierl {

/// Mean and spread of one group of runs on a shared iteration grid.
struct Curve {
  std::string label;
  std::vector<std::int64_t> iterations;
  std::vector<double> mean;
  /// Sample standard deviation per iteration (0 for a single run).
  std::vector<double> std;
  int runs = 0;
};

/// Reads run CSVs and groups them by the mode prefix of the file name
/// (`<mode>_seed<s>.csv`; other names form their own group). Throws
/// ConfigError when iteration grids differ.
std::vector<Curve> load_curves(const std::vector<std::string>& csv_paths, const std::string& column = "return");

std::string render_svg(const std::vector<Curve>& curves, const std::string& title, const std::string& y_label);

void plot_curves(const std::vector<std::string>& csv_paths, const std::string& svg_path,
                 const std::string& column = "return");

}  // namespace bierl
