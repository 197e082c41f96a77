// SPDX-License-Identifier: Apache-2.0
//
// Minimal deterministic SVG rendering for spectra and activity matrices.
#pragma once

#include <string>
#include <vector>

#include "emt/numerics.hpp"

namespace emt::svg {

/// Complex-plane scatter with the unit circle and spokes at 2*pi*k/s
/// (no spokes when s < 1).
std::string eigen_scatter(const std::vector<Complex>& points, int s, const std::string& title);

/// Heatmap with a diverging blue-white-red map symmetric around 0.
std::string heatmap(const RealMatrix& m, const std::string& title);

/// Writes text to path; throws std::runtime_error when the file cannot be written.
void write_file(const std::string& path, const std::string& text);

}  // namespace emt::svg
