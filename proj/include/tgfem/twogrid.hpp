#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "tgfem/assembly.hpp"
#include "tgfem/errors.hpp"
#include "tgfem/fem_function.hpp"
#include "tgfem/mesh_audit.hpp"
#include "tgfem/solvers.hpp"

namespace tgfem {

/// Exact embedding of a coarse P1 function into a (multi-level) uniform
/// refinement of its mesh.
[[nodiscard]] inline FemFunction prolongate(const FemFunction &coarse, const MeshPtr &fine) {
  const int depth = fine->depth_below(*coarse.mesh);
  if (depth < 0) {
    throw NotNested("target mesh is not a uniform refinement of the source mesh");
  }
  std::vector<const Mesh *> chain; // fine ... first child of coarse
  for (const Mesh *m = fine.get(); m != coarse.mesh.get(); m = m->parent.get()) {
    chain.push_back(m);
  }
  std::vector<double> values = coarse.coeffs;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const Mesh &child = **it;
    std::vector<double> next(child.num_vertices());
    for (std::size_t i = 0; i < next.size(); ++i) {
      const auto &pp = child.vertex_parents[i];
      next[i] = 0.5 * (values[pp[0]] + values[pp[1]]);
    }
    values = std::move(next);
  }
  return {fine, std::move(values)};
}

struct LinearizedResult {
  FemFunction solution;
  SolveReport report;
  std::size_t negative_slope_nodes = 0; // vertices where b'(u_base) < 0 in an adjacent element
};

/// One Newton update about `u_base` on the fine mesh:
/// (A + M_{b'(u_base)}) u = load + (b'(u_base) u_base - b(u_base), phi), Dirichlet imposed.
[[nodiscard]] inline LinearizedResult linearized_solve(const SemilinearSystem &fine, const FemFunction &u_base,
                                                       const PcgOptions &lin = {}) {
  if (u_base.mesh != fine.mesh()) {
    throw NotNested("linearisation point does not live on the fine mesh");
  }
  const Mesh &mesh = *fine.mesh();
  const auto &b = fine.problem().nonlinearity;
  LinearizedResult out;
  std::vector<std::uint8_t> negative(mesh.num_vertices(), 0);
  for (const auto &t : mesh.triangles) {
    for (auto v : t.v) {
      if (b.d1({mesh.vertices[v], t.region}, u_base[v]) < 0.0) {
        negative[v] = 1;
      }
    }
  }
  out.negative_slope_nodes = static_cast<std::size_t>(std::count(negative.begin(), negative.end(), 1));
  auto rhs = fine.load();
  const ReactionFn shift = [&b](const Site &s, double xi) { return b.d1(s, xi) * xi - b.eval(s, xi); };
  const auto extra = assemble_reaction_load(u_base, shift, fine.quadrature());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    rhs[i] += extra[i];
  }
  auto [mat, vec] = apply_dirichlet(fine.jacobian(u_base), std::move(rhs), mesh, fine.problem().dirichlet);
  auto opts = lin;
  opts.max_iters = std::max(opts.max_iters, 4 * mesh.num_vertices());
  auto [x, report] = pcg_solve(mat, vec, opts, u_base.coeffs);
  out.solution = FemFunction(fine.mesh(), std::move(x));
  out.report = std::move(report);
  return out;
}

[[nodiscard]] inline LinearizedResult linearized_solve(const MeshPtr &fine_mesh, const Problem &problem,
                                                       const FemFunction &u_base, const PcgOptions &lin = {},
                                                       const QuadratureRule &quad = triangle_rule()) {
  const SemilinearSystem sys(fine_mesh, problem, quad);
  return linearized_solve(sys, u_base, lin);
}

struct TwoGridOptions {
  NewtonOptions coarse{.abs_tol = 1e-12};
  PcgOptions fine{.tol = 1e-12};
  int quad_degree = kDefaultTriangleDegree;
  bool check_angle = true;
};

struct TwoGridResult {
  FemFunction coarse_solution;    // u_H on the coarse mesh
  FemFunction prolonged_coarse;   // u_H embedded in the fine space
  FemFunction fine_solution;      // u^h
  SolveReport coarse_report;
  SolveReport fine_report;
  std::size_t negative_slope_nodes = 0;
  double coarse_h = 0.0;
  double fine_h = 0.0;
};

/// Exact (to `opts.coarse.abs_tol`) nonlinear solve on the coarse mesh, then a
/// single linearised solve on the fine mesh.
[[nodiscard]] inline TwoGridResult two_grid_solve(const MeshPtr &coarse, const MeshPtr &fine, const Problem &problem,
                                                  const TwoGridOptions &opts = {}) {
  if (fine->depth_below(*coarse) <= 0) {
    throw NotNested("fine mesh must be a strict uniform refinement of the coarse mesh");
  }
  if (opts.check_angle) {
    for (const auto *m : {coarse.get(), fine.get()}) {
      if (!check_angle_condition(*m, problem.diffusion).passes) {
        throw ValidationError("two-grid meshes must satisfy the nonpositive off-diagonal condition");
      }
    }
  }
  const auto &quad = triangle_rule(opts.quad_degree);
  TwoGridResult out;
  {
    const SemilinearSystem coarse_sys(coarse, problem, quad);
    auto [u_coarse, report] = newton_solve(coarse_sys, FemFunction(coarse), opts.coarse);
    out.coarse_solution = std::move(u_coarse);
    out.coarse_report = std::move(report);
  }
  out.prolonged_coarse = prolongate(out.coarse_solution, fine);
  const SemilinearSystem fine_sys(fine, problem, quad);
  auto lin = linearized_solve(fine_sys, out.prolonged_coarse, opts.fine);
  out.fine_solution = std::move(lin.solution);
  out.fine_report = std::move(lin.report);
  out.negative_slope_nodes = lin.negative_slope_nodes;
  out.coarse_h = coarse->h;
  out.fine_h = fine->h;
  return out;
}

/// <F'(u_base) chi, chi> with chi = u_fine - u_two_grid, evaluated with the
/// same quadrature as the discrete operator.
[[nodiscard]] inline double linearization_defect(const SemilinearSystem &fine, const FemFunction &u_base,
                                                 const FemFunction &u_fine, const FemFunction &u_two_grid) {
  const auto chi = u_fine - u_two_grid;
  const auto j = fine.jacobian(u_base);
  const auto jchi = j * std::span<const double>(chi.coeffs);
  double s = 0.0;
  for (std::size_t i = 0; i < chi.size(); ++i) {
    if (!fine.mesh()->is_boundary(i)) {
      s += jchi[i] * chi[i];
    }
  }
  return s;
}

enum class SnapMode { up, nearest };

/// Exponent e with H = h^e: (s-1)/(t + 2(s-1)) in 2D and (s-1)/(t/2 + 2(s-1))
/// in 3D, where t = min(s, tau) - 1.
[[nodiscard]] inline double coarse_size_exponent(double s, double tau, int d) {
  if (!(s > 1.0) || !(tau > 1.0)) {
    throw InvalidRegularity("regularity indices must satisfy s > 1 and tau > 1");
  }
  if (d != 2 && d != 3) {
    throw InvalidRegularity("dimension must be 2 or 3");
  }
  const double t = std::min(s, tau) - 1.0;
  return (s - 1.0) / ((d == 2 ? t : 0.5 * t) + 2.0 * (s - 1.0));
}

/// Coarse mesh size for fine size `h`. With `available` empty the raw
/// formula value is returned; otherwise it is snapped to one of the
/// available sizes that are strictly coarser than h: the finest one not
/// finer than the formula (SnapMode::up) or the closest on a log scale.
[[nodiscard]] inline double select_coarse_size(double h, double s, double tau, int d,
                                               std::span<const double> available = {}, SnapMode snap = SnapMode::up) {
  const double target = std::pow(h, coarse_size_exponent(s, tau, d));
  if (available.empty()) {
    return target;
  }
  constexpr double rel = 1e-9;
  double best = std::numeric_limits<double>::quiet_NaN();
  double coarsest = -std::numeric_limits<double>::infinity();
  for (double a : available) {
    if (!(a > h * (1.0 + rel))) {
      continue;
    }
    coarsest = std::max(coarsest, a);
    if (snap == SnapMode::up) {
      if (a >= target * (1.0 - rel) && (std::isnan(best) || a < best)) {
        best = a;
      }
    } else if (std::isnan(best) || std::abs(std::log(a / target)) < std::abs(std::log(best / target))) {
      best = a;
    }
  }
  if (std::isnan(best)) {
    if (coarsest == -std::numeric_limits<double>::infinity()) {
      throw InvalidRegularity("no available coarse size is coarser than h");
    }
    best = coarsest;
  }
  return best;
}

} // namespace tgfem
