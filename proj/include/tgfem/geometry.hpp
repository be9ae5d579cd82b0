#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "tgfem/errors.hpp"

namespace tgfem {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point a, Point b) = default;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = -1.0;
  double x1 = 1.0;
  double y0 = -1.0;
  double y1 = 1.0;

  [[nodiscard]] constexpr double width() const { return x1 - x0; }
  [[nodiscard]] constexpr double height() const { return y1 - y0; }
  [[nodiscard]] constexpr double area() const { return width() * height(); }
};

using TriangleCoords = std::array<Point, 3>;
using Matrix3 = std::array<std::array<double, 3>, 3>;

[[nodiscard]] inline double signed_area(const TriangleCoords &t) {
  return 0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y));
}

[[nodiscard]] inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

[[nodiscard]] inline double diameter(const TriangleCoords &t) {
  return std::max({distance(t[0], t[1]), distance(t[1], t[2]), distance(t[2], t[0])});
}

/// Gradients of the barycentric coordinates; constant over the triangle.
[[nodiscard]] inline std::array<Point, 3> barycentric_gradients(const TriangleCoords &t) {
  const double two_area = 2.0 * signed_area(t);
  std::array<Point, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point &pj = t[(i + 1) % 3];
    const Point &pk = t[(i + 2) % 3];
    g[i] = {(pj.y - pk.y) / two_area, (pk.x - pj.x) / two_area};
  }
  return g;
}

/// Map barycentric coordinates to a physical point.
[[nodiscard]] inline Point map_barycentric(const TriangleCoords &t, const std::array<double, 3> &l) {
  return {l[0] * t[0].x + l[1] * t[1].x + l[2] * t[2].x, l[0] * t[0].y + l[1] * t[1].y + l[2] * t[2].y};
}

/// P1 element stiffness K_ij = D * area * grad(l_i) . grad(l_j).
[[nodiscard]] inline Matrix3 local_stiffness(const TriangleCoords &t, double diffusion) {
  const double area = signed_area(t);
  if (!(area > 0.0)) {
    throw DegenerateTriangle("triangle has non-positive area");
  }
  const auto g = barycentric_gradients(t);
  Matrix3 k{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      k[i][j] = diffusion * area * (g[i].x * g[j].x + g[i].y * g[j].y);
    }
  }
  return k;
}

} // namespace tgfem
