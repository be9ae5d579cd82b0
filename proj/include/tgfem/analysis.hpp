#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tgfem/errors.hpp"
#include "tgfem/fem_function.hpp"
#include "tgfem/problems.hpp"
#include "tgfem/quadrature.hpp"
#include "tgfem/twogrid.hpp"

namespace tgfem {

/// |||v||| = sqrt(a(v, v)); exact for P1 since gradients are elementwise constant.
[[nodiscard]] inline double energy_norm(const FemFunction &v, const std::array<double, 2> &diffusion) {
  double s = 0.0;
  for (const auto &t : v.mesh->triangles) {
    const Point g = v.gradient(t);
    s += diffusion[t.region == 1 ? 0 : 1] * signed_area(v.mesh->coords(t)) * (g.x * g.x + g.y * g.y);
  }
  return std::sqrt(s);
}

/// ||grad v||_{0,2}.
[[nodiscard]] inline double gradient_norm(const FemFunction &v) { return energy_norm(v, {1.0, 1.0}); }

namespace detail {

inline void check_lp(int p) {
  if (p != 2 && p != 4) {
    throw std::invalid_argument("only p = 2 and p = 4 are supported");
  }
}

} // namespace detail

/// (int |f|^p)^(1/p) for a pointwise callback, by quadrature on `mesh`.
[[nodiscard]] inline double lp_norm(const Mesh &mesh, const std::function<double(const Site &)> &f, int p,
                                    const QuadratureRule &quad = triangle_rule()) {
  detail::check_lp(p);
  double s = 0.0;
  for (const auto &t : mesh.triangles) {
    const auto xy = mesh.coords(t);
    const double area = signed_area(xy);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const double v = f({map_barycentric(xy, quad.points[q]), t.region});
      const double v2 = v * v;
      s += quad.weights[q] * area * (p == 2 ? v2 : v2 * v2);
    }
  }
  return std::pow(s, 1.0 / p);
}

/// L^p norm of a P1 function; exact when the rule has degree >= p.
[[nodiscard]] inline double lp_norm(const FemFunction &v, int p, const QuadratureRule &quad = triangle_rule()) {
  detail::check_lp(p);
  if (quad.degree < p) {
    throw std::invalid_argument("quadrature degree must be at least p");
  }
  double s = 0.0;
  for (const auto &t : v.mesh->triangles) {
    const double area = signed_area(v.mesh->coords(t));
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const double x = v.eval(t, quad.points[q]);
      const double x2 = x * x;
      s += quad.weights[q] * area * (p == 2 ? x2 : x2 * x2);
    }
  }
  return std::pow(s, 1.0 / p);
}

struct ErrorRecord {
  double h = 0.0;
  std::size_t n_dof = 0;
  double err_energy = 0.0;
  double err_l2 = 0.0;
  double err_l4 = 0.0;
  double err_linf_nodal = 0.0;
};

/// Errors against a manufactured solution. Exact gradients are integrated
/// per region; no interpolant of the exact solution is formed.
[[nodiscard]] inline ErrorRecord error_norms(const FemFunction &uh, const std::array<double, 2> &diffusion,
                                             const ManufacturedSolution &exact,
                                             const QuadratureRule &quad = triangle_rule()) {
  const Mesh &mesh = *uh.mesh;
  ErrorRecord rec;
  rec.h = mesh.h;
  rec.n_dof = mesh.num_free_vertices();
  double e_energy = 0.0;
  double e_l2 = 0.0;
  double e_l4 = 0.0;
  for (const auto &t : mesh.triangles) {
    const auto xy = mesh.coords(t);
    const double area = signed_area(xy);
    const double d = diffusion[t.region == 1 ? 0 : 1];
    const Point gh = uh.gradient(t);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const Site s{map_barycentric(xy, quad.points[q]), t.region};
      const Point g = exact.exact_grad(s) - gh;
      const double e = exact.exact(s) - uh.eval(t, quad.points[q]);
      const double w = quad.weights[q] * area;
      e_energy += w * d * (g.x * g.x + g.y * g.y);
      e_l2 += w * e * e;
      e_l4 += w * e * e * e * e;
    }
    for (int i = 0; i < 3; ++i) {
      rec.err_linf_nodal =
          std::max(rec.err_linf_nodal, std::abs(exact.exact({xy[i], t.region}) - uh[static_cast<std::size_t>(t.v[i])]));
    }
  }
  rec.err_energy = std::sqrt(e_energy);
  rec.err_l2 = std::sqrt(e_l2);
  rec.err_l4 = std::pow(e_l4, 0.25);
  return rec;
}

/// Errors against a reference solution on a nested finer mesh; `uh` is
/// prolongated to the reference mesh so every norm is exact.
[[nodiscard]] inline ErrorRecord error_norms(const FemFunction &uh, const std::array<double, 2> &diffusion,
                                             const FemFunction &reference) {
  const auto e = reference - prolongate(uh, reference.mesh);
  ErrorRecord rec;
  rec.h = uh.mesh->h;
  rec.n_dof = uh.mesh->num_free_vertices();
  rec.err_energy = energy_norm(e, diffusion);
  rec.err_l2 = lp_norm(e, 2, triangle_rule(4));
  rec.err_l4 = lp_norm(e, 4, triangle_rule(4));
  for (double v : e.coeffs) {
    rec.err_linf_nodal = std::max(rec.err_linf_nodal, std::abs(v));
  }
  return rec;
}

/// Rates log(e_i / e_{i+1}) / log(h_i / h_{i+1}) between consecutive entries.
[[nodiscard]] inline std::vector<double> estimate_eoc(const std::vector<double> &h, const std::vector<double> &err) {
  if (h.size() != err.size() || h.size() < 2) {
    throw std::invalid_argument("need at least two (h, error) pairs");
  }
  std::vector<double> rates;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    if (!(h[i + 1] < h[i])) {
      throw std::invalid_argument("mesh sizes must be strictly decreasing");
    }
    if (err[i] == 0.0 || err[i + 1] == 0.0) {
      throw ZeroError("error is zero; rate undefined");
    }
    rates.push_back(std::log(err[i] / err[i + 1]) / std::log(h[i] / h[i + 1]));
  }
  return rates;
}

struct ConvergenceReport {
  std::vector<ErrorRecord> records; // decreasing h
  std::vector<double> eoc_energy;
  std::vector<double> eoc_l2;
  std::vector<double> eoc_l4;
};

[[nodiscard]] inline ConvergenceReport make_convergence_report(std::vector<ErrorRecord> records) {
  ConvergenceReport rep;
  rep.records = std::move(records);
  if (rep.records.size() < 2) {
    return rep;
  }
  std::vector<double> h;
  std::vector<double> en;
  std::vector<double> l2;
  std::vector<double> l4;
  for (const auto &r : rep.records) {
    h.push_back(r.h);
    en.push_back(r.err_energy);
    l2.push_back(r.err_l2);
    l4.push_back(r.err_l4);
  }
  rep.eoc_energy = estimate_eoc(h, en);
  rep.eoc_l2 = estimate_eoc(h, l2);
  rep.eoc_l4 = estimate_eoc(h, l4);
  return rep;
}

struct LinfReport {
  bool passes = true;
  double min_value = 0.0;
  double max_value = 0.0;
  std::vector<Index> violating;
};

/// Checks lower - tol <= u_i <= upper + tol at every vertex (P1 extrema are nodal).
[[nodiscard]] inline LinfReport linf_check(const FemFunction &u, const Barriers &barriers, double tol = 1e-9) {
  LinfReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    rep.min_value = std::min(rep.min_value, u[i]);
    rep.max_value = std::max(rep.max_value, u[i]);
    if (u[i] < barriers.lower - tol || u[i] > barriers.upper + tol) {
      rep.violating.push_back(static_cast<Index>(i));
    }
  }
  rep.passes = rep.violating.empty();
  return rep;
}

/// Constant choice for the 3D interpolation inequality.
enum class LadyzhenskayaConstant { sqrt2, four_thirds };

/// C * ||v||_2^a * ||grad v||_2^b - ||v||_4 with (C, a, b) = (sqrt(2), 1/4, 3/4),
/// or C = (4/3)^(3/8) for the alternative constant.
[[nodiscard]] inline double ladyzhenskaya_margin_3d(double l2, double grad_l2, double l4,
                                                    LadyzhenskayaConstant c = LadyzhenskayaConstant::sqrt2) {
  const double constant = c == LadyzhenskayaConstant::sqrt2 ? std::sqrt(2.0) : std::pow(4.0 / 3.0, 3.0 / 8.0);
  return constant * std::pow(l2, 0.25) * std::pow(grad_l2, 0.75) - l4;
}

/// 2^(1/4) ||v||_2^(1/2) ||grad v||_2^(1/2) - ||v||_4 for v in H^1_0; never
/// negative for a correct implementation.
[[nodiscard]] inline double ladyzhenskaya_margin(const FemFunction &v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.mesh->is_boundary(i) && v[i] != 0.0) {
      throw BoundaryNotZero("function does not vanish on the boundary (vertex " + std::to_string(i) + ")");
    }
  }
  const auto &quad = triangle_rule(4);
  const double l2 = lp_norm(v, 2, quad);
  const double l4 = lp_norm(v, 4, quad);
  const double grad = gradient_norm(v);
  return std::pow(2.0, 0.25) * std::sqrt(l2 * grad) - l4;
}

struct BoundRatio {
  double value = 0.0;
  bool degenerate = false; // denominator below 1e-14; value is +inf
};

/// |||u_h - u^h||| / ||u_h - u_H||_4^2, all functions on the fine mesh.
[[nodiscard]] inline BoundRatio twogrid_bound_ratio(const FemFunction &u_fine, const FemFunction &u_coarse_prolonged,
                                                    const FemFunction &u_two_grid,
                                                    const std::array<double, 2> &diffusion) {
  const double num = energy_norm(u_fine - u_two_grid, diffusion);
  const double l4 = lp_norm(u_fine - u_coarse_prolonged, 4, triangle_rule(4));
  if (l4 < 1e-14) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {num / (l4 * l4), false};
}

} // namespace tgfem
