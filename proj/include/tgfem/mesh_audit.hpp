#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "tgfem/assembly.hpp"
#include "tgfem/mesh.hpp"

namespace tgfem {

/// Outcome of the nonpositive off-diagonal stiffness check.
struct AngleReport {
  double worst_offdiag = -std::numeric_limits<double>::infinity();
  std::vector<Edge> violating_pairs; // i < j with a(phi_i, phi_j) > tolerance
  double tolerance = 0.0;            // absolute; 1e-12 times the largest diagonal entry
  bool passes = true;
};

/// Requires a(phi_i, phi_j) <= 0 for every pair of distinct vertices.
[[nodiscard]] inline AngleReport check_angle_condition(const Mesh &mesh, const std::array<double, 2> &diffusion) {
  const auto a = assemble_stiffness(mesh, diffusion);
  const auto &p = a.pattern();
  const auto vals = a.values();
  AngleReport report;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) {
    max_diag = std::max(max_diag, a.at(i, i));
  }
  report.tolerance = 1e-12 * max_diag;
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(p.cols[k]);
      if (j <= i) {
        continue;
      }
      report.worst_offdiag = std::max(report.worst_offdiag, vals[k]);
      if (vals[k] > report.tolerance) {
        report.violating_pairs.push_back({static_cast<Index>(i), static_cast<Index>(j)});
      }
    }
  }
  report.passes = report.violating_pairs.empty();
  return report;
}

} // namespace tgfem
