#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "frettrace/metrics.hpp"

namespace frettrace {

/// Renders F1 vs pitch tolerance as a two-panel SVG (string-dependent on
/// top, string-agnostic below), one curve per labeled sweep.
void plot_tolerance_curves(const std::vector<std::pair<std::string, ToleranceSweep>>& sweeps,
                           const std::filesystem::path& svg_path);

}  // namespace frettrace
