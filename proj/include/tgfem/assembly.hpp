#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "tgfem/fem_function.hpp"
#include "tgfem/geometry.hpp"
#include "tgfem/mesh.hpp"
#include "tgfem/problems.hpp"
#include "tgfem/quadrature.hpp"
#include "tgfem/sparse.hpp"

namespace tgfem {

/// Global stiffness a(phi_j, phi_i) with piecewise-constant diffusion, no
/// boundary conditions applied.
[[nodiscard]] inline SparseMatrix assemble_stiffness(const Mesh &mesh, const std::array<double, 2> &diffusion,
                                                     std::shared_ptr<const SparsityPattern> pattern = nullptr) {
  SparseMatrix a(pattern ? std::move(pattern) : make_pattern(mesh));
  for (const auto &t : mesh.triangles) {
    const auto k = local_stiffness(mesh.coords(t), diffusion[t.region == 1 ? 0 : 1]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        a.add(t.v[i], t.v[j], k[i][j]);
      }
    }
  }
  return a;
}

/// Weighted mass matrix M_ij = int weight(x, u(x)) phi_j phi_i, by quadrature.
[[nodiscard]] inline SparseMatrix assemble_reaction_jacobian(const FemFunction &state, const ReactionFn &weight,
                                                             const QuadratureRule &quad,
                                                             std::shared_ptr<const SparsityPattern> pattern = nullptr) {
  const Mesh &mesh = *state.mesh;
  SparseMatrix m(pattern ? std::move(pattern) : make_pattern(mesh));
  for (const auto &t : mesh.triangles) {
    const auto xy = mesh.coords(t);
    const double area = signed_area(xy);
    Matrix3 local{};
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto &l = quad.points[q];
      const double c = quad.weights[q] * area * weight({map_barycentric(xy, l), t.region}, state.eval(t, l));
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          local[i][j] += c * l[i] * l[j];
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m.add(t.v[i], t.v[j], local[i][j]);
      }
    }
  }
  return m;
}

/// Load r_i = int g(x, u(x)) phi_i, by quadrature.
[[nodiscard]] inline std::vector<double> assemble_reaction_load(const FemFunction &state, const ReactionFn &g,
                                                                const QuadratureRule &quad) {
  const Mesh &mesh = *state.mesh;
  std::vector<double> r(mesh.num_vertices(), 0.0);
  for (const auto &t : mesh.triangles) {
    const auto xy = mesh.coords(t);
    const double area = signed_area(xy);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto &l = quad.points[q];
      const double c = quad.weights[q] * area * g({map_barycentric(xy, l), t.region}, state.eval(t, l));
      for (int i = 0; i < 3; ++i) {
        r[t.v[i]] += c * l[i];
      }
    }
  }
  return r;
}

[[nodiscard]] inline std::vector<double> assemble_volume_load(const Mesh &mesh, const ScalarField &f,
                                                              const QuadratureRule &quad) {
  std::vector<double> r(mesh.num_vertices(), 0.0);
  for (const auto &t : mesh.triangles) {
    const auto xy = mesh.coords(t);
    const double area = signed_area(xy);
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto &l = quad.points[q];
      const double c = quad.weights[q] * area * f({map_barycentric(xy, l), t.region});
      for (int i = 0; i < 3; ++i) {
        r[t.v[i]] += c * l[i];
      }
    }
  }
  return r;
}

/// Nodal delta load; `location` must coincide with a vertex.
[[nodiscard]] inline std::vector<double> assemble_point_load(const Mesh &mesh, const Point &location, double magnitude) {
  std::vector<double> r(mesh.num_vertices(), 0.0);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    if (distance(mesh.vertices[i], location) <= 1e-12) {
      r[i] = magnitude;
      return r;
    }
  }
  throw NotAVertex("point load location (" + std::to_string(location.x) + ", " + std::to_string(location.y) +
                   ") is not a mesh vertex");
}

/// v_i = sum over interface edges of int_edge g phi_i ds (2-point Gauss).
[[nodiscard]] inline std::vector<double> assemble_interface_flux(const Mesh &mesh, const BoundaryFn &g) {
  std::vector<double> r(mesh.num_vertices(), 0.0);
  const auto rule = gauss2_edge_rule();
  for (const auto &e : mesh.interface_edges) {
    const Point a = mesh.vertices[e[0]];
    const Point b = mesh.vertices[e[1]];
    const double len = distance(a, b);
    for (int q = 0; q < 2; ++q) {
      const double s = rule.points[q];
      const double gv = g((1.0 - s) * a + s * b) * rule.weights[q] * len;
      r[e[0]] += gv * (1.0 - s);
      r[e[1]] += gv * s;
    }
  }
  return r;
}

/// Right-hand side of the weak form: (f, v) + <g_interface, v> + point load.
[[nodiscard]] inline std::vector<double> assemble_load(const Mesh &mesh, const Problem &problem,
                                                       const QuadratureRule &quad) {
  std::vector<double> r(mesh.num_vertices(), 0.0);
  auto accumulate = [&r](const std::vector<double> &v) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] += v[i];
    }
  };
  if (problem.volume_source) {
    accumulate(assemble_volume_load(mesh, problem.volume_source, quad));
  }
  if (problem.interface_flux) {
    accumulate(assemble_interface_flux(mesh, problem.interface_flux));
  }
  if (problem.point_source && problem.point_source->magnitude != 0.0) {
    accumulate(assemble_point_load(mesh, problem.point_source->location, problem.point_source->magnitude));
  }
  return r;
}

/// g at boundary vertices, zero elsewhere.
[[nodiscard]] inline std::vector<double> dirichlet_values(const Mesh &mesh, const BoundaryFn &g) {
  std::vector<double> v(mesh.num_vertices(), 0.0);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    if (mesh.is_boundary(i)) {
      v[i] = g(mesh.vertices[i]);
    }
  }
  return v;
}

/// Symmetric elimination of Dirichlet rows and columns. Known values are
/// moved to the right-hand side, boundary rows become identity rows.
[[nodiscard]] inline std::pair<SparseMatrix, std::vector<double>>
apply_dirichlet(SparseMatrix matrix, std::vector<double> rhs, std::span<const std::uint8_t> boundary,
                std::span<const double> values) {
  const auto &p = matrix.pattern();
  auto vals = matrix.values();
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(p.cols[k]);
      if (boundary[i]) {
        vals[k] = (i == j) ? 1.0 : 0.0;
      } else if (boundary[j]) {
        rhs[i] -= vals[k] * values[j];
        vals[k] = 0.0;
      }
    }
  }
  for (std::size_t i = 0; i < p.n; ++i) {
    if (boundary[i]) {
      rhs[i] = values[i];
    }
  }
  return {std::move(matrix), std::move(rhs)};
}

[[nodiscard]] inline std::pair<SparseMatrix, std::vector<double>>
apply_dirichlet(SparseMatrix matrix, std::vector<double> rhs, const Mesh &mesh, const BoundaryFn &g) {
  const auto values = dirichlet_values(mesh, g);
  return apply_dirichlet(std::move(matrix), std::move(rhs), mesh.boundary, values);
}

/// Discrete semilinear operator on one mesh: caches the stiffness matrix and
/// the load vector so that residuals and Jacobians only redo the reaction part.
class SemilinearSystem {
public:
  SemilinearSystem(MeshPtr mesh, const Problem &problem, const QuadratureRule &quad)
      : mesh_(std::move(mesh)), problem_(&problem), quad_(&quad), pattern_(make_pattern(*mesh_)),
        stiffness_(assemble_stiffness(*mesh_, problem.diffusion, pattern_)),
        load_(assemble_load(*mesh_, problem, quad)) {}

  [[nodiscard]] const MeshPtr &mesh() const { return mesh_; }
  [[nodiscard]] const Problem &problem() const { return *problem_; }
  [[nodiscard]] const QuadratureRule &quadrature() const { return *quad_; }
  [[nodiscard]] const SparseMatrix &stiffness() const { return stiffness_; }
  [[nodiscard]] const std::vector<double> &load() const { return load_; }

  /// r_i = a(u, phi_i) + (b(u), phi_i) - load_i, zero on Dirichlet rows.
  [[nodiscard]] std::vector<double> residual(const FemFunction &u) const {
    auto r = stiffness_ * std::span<const double>(u.coeffs);
    const auto br = assemble_reaction_load(u, problem_->nonlinearity.eval, *quad_);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = mesh_->is_boundary(i) ? 0.0 : r[i] + br[i] - load_[i];
    }
    return r;
  }

  /// A + M_{b'(u)} without boundary conditions.
  [[nodiscard]] SparseMatrix jacobian(const FemFunction &u) const {
    return stiffness_ + assemble_reaction_jacobian(u, problem_->nonlinearity.d1, *quad_, pattern_);
  }

  /// u with the Dirichlet data written into the boundary entries.
  [[nodiscard]] FemFunction with_boundary_values(FemFunction u) const {
    for (std::size_t i = 0; i < mesh_->num_vertices(); ++i) {
      if (mesh_->is_boundary(i)) {
        u[i] = problem_->dirichlet(mesh_->vertices[i]);
      }
    }
    return u;
  }

private:
  MeshPtr mesh_;
  const Problem *problem_;
  const QuadratureRule *quad_;
  std::shared_ptr<const SparsityPattern> pattern_;
  SparseMatrix stiffness_;
  std::vector<double> load_;
};

/// Residual of the discrete semilinear problem for `state`.
[[nodiscard]] inline std::vector<double> assemble_semilinear_residual(const FemFunction &state, const Problem &problem,
                                                                      const QuadratureRule &quad) {
  return SemilinearSystem(state.mesh, problem, quad).residual(state);
}

} // namespace tgfem
