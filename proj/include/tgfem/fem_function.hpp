#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tgfem/mesh.hpp"

namespace tgfem {

/// P1 Lagrange function: one nodal value per vertex of `mesh`.
struct FemFunction {
  MeshPtr mesh;
  std::vector<double> coeffs;

  FemFunction() = default;
  explicit FemFunction(MeshPtr m, double value = 0.0) : mesh(std::move(m)), coeffs(mesh->num_vertices(), value) {}
  FemFunction(MeshPtr m, std::vector<double> c) : mesh(std::move(m)), coeffs(std::move(c)) {
    if (coeffs.size() != mesh->num_vertices()) {
      throw std::invalid_argument("coefficient count does not match vertex count");
    }
  }

  [[nodiscard]] std::size_t size() const { return coeffs.size(); }
  double &operator[](std::size_t i) { return coeffs[i]; }
  double operator[](std::size_t i) const { return coeffs[i]; }

  /// Value inside triangle `t` at barycentric point `l`.
  [[nodiscard]] double eval(const Triangle &t, const std::array<double, 3> &l) const {
    return l[0] * coeffs[t.v[0]] + l[1] * coeffs[t.v[1]] + l[2] * coeffs[t.v[2]];
  }

  [[nodiscard]] Point gradient(const Triangle &t) const {
    const auto g = barycentric_gradients(mesh->coords(t));
    Point out{};
    for (int i = 0; i < 3; ++i) {
      out = out + coeffs[t.v[i]] * g[i];
    }
    return out;
  }
};

/// Nodal interpolant of `f` on `mesh`.
template <typename F>
[[nodiscard]] FemFunction interpolate(const MeshPtr &mesh, F &&f) {
  FemFunction u(mesh);
  for (std::size_t i = 0; i < mesh->num_vertices(); ++i) {
    u[i] = f(mesh->vertices[i]);
  }
  return u;
}

[[nodiscard]] inline FemFunction operator-(const FemFunction &a, const FemFunction &b) {
  if (a.mesh != b.mesh) {
    throw std::invalid_argument("functions live on different meshes");
  }
  FemFunction r(a.mesh);
  for (std::size_t i = 0; i < a.size(); ++i) {
    r[i] = a[i] - b[i];
  }
  return r;
}

} // namespace tgfem
