#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgfem/errors.hpp"
#include "tgfem/geometry.hpp"

namespace tgfem {

using Index = std::int32_t;
using Edge = std::array<Index, 2>;

struct Triangle {
  std::array<Index, 3> v{};
  int region = 2; // 1 = inside the interface box, 2 = outside
};

/// Interface-resolving P1 triangulation.
///
/// Meshes are immutable once built and are passed around as
/// `std::shared_ptr<const Mesh>` so that refinements can point at their
/// parent. A refined mesh numbers the parent's vertices first (same indices)
/// followed by one vertex per parent edge; `vertex_parents[i]` names the two
/// parent vertices whose midpoint vertex i is (both equal for copied vertices).
struct Mesh {
  std::vector<Point> vertices;
  std::vector<Triangle> triangles;
  std::vector<std::uint8_t> boundary; // one flag per vertex, 1 on the Dirichlet boundary
  std::vector<Edge> interface_edges;
  double h = 0.0; // maximum element diameter
  std::shared_ptr<const Mesh> parent;
  std::vector<Edge> vertex_parents;

  [[nodiscard]] std::size_t num_vertices() const { return vertices.size(); }
  [[nodiscard]] std::size_t num_triangles() const { return triangles.size(); }
  [[nodiscard]] bool is_boundary(std::size_t v) const { return boundary[v] != 0; }

  [[nodiscard]] TriangleCoords coords(const Triangle &t) const {
    return {vertices[t.v[0]], vertices[t.v[1]], vertices[t.v[2]]};
  }

  [[nodiscard]] std::vector<Index> boundary_vertices() const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      if (boundary[i]) {
        out.push_back(static_cast<Index>(i));
      }
    }
    return out;
  }

  [[nodiscard]] std::size_t num_free_vertices() const {
    std::size_t n = 0;
    for (auto b : boundary) {
      n += b ? 0 : 1;
    }
    return n;
  }

  [[nodiscard]] double total_area() const {
    double a = 0.0;
    for (const auto &t : triangles) {
      a += signed_area(coords(t));
    }
    return a;
  }

  /// Number of uniform refinements separating this mesh from `ancestor`, or -1.
  [[nodiscard]] int depth_below(const Mesh &ancestor) const {
    int depth = 0;
    for (const Mesh *m = this; m != nullptr; m = m->parent.get(), ++depth) {
      if (m == &ancestor) {
        return depth;
      }
    }
    return -1;
  }
};

using MeshPtr = std::shared_ptr<const Mesh>;

namespace detail {

[[nodiscard]] inline std::uint64_t edge_key(Index a, Index b) {
  if (a > b) {
    std::swap(a, b);
  }
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

struct EdgeInfo {
  Edge ends{};          // as first encountered (orientation of the first triangle)
  std::array<Index, 2> tris{-1, -1};
  int count = 0;
  Index id = 0;
};

/// Unique edges in order of first appearance while sweeping the triangles.
struct EdgeTable {
  std::unordered_map<std::uint64_t, EdgeInfo> map;
  std::vector<std::uint64_t> order;

  explicit EdgeTable(const std::vector<Triangle> &triangles) {
    map.reserve(triangles.size() * 2);
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      const auto &v = triangles[t].v;
      for (int e = 0; e < 3; ++e) {
        const Index a = v[e];
        const Index b = v[(e + 1) % 3];
        const auto key = edge_key(a, b);
        auto [it, inserted] = map.try_emplace(key);
        auto &info = it->second;
        if (inserted) {
          info.ends = {a, b};
          info.id = static_cast<Index>(order.size());
          order.push_back(key);
        }
        if (info.count < 2) {
          info.tris[info.count] = static_cast<Index>(t);
        }
        ++info.count;
      }
    }
  }

  [[nodiscard]] const EdgeInfo *find(Index a, Index b) const {
    auto it = map.find(edge_key(a, b));
    return it == map.end() ? nullptr : &it->second;
  }
};

[[nodiscard]] inline double max_diameter(const Mesh &m) {
  double h = 0.0;
  for (const auto &t : m.triangles) {
    h = std::max(h, diameter(m.coords(t)));
  }
  return h;
}

/// Interior edges whose two neighbours carry different region tags.
[[nodiscard]] inline std::vector<Edge> region_boundary_edges(const std::vector<Triangle> &triangles,
                                                             const EdgeTable &edges) {
  std::vector<Edge> out;
  for (auto key : edges.order) {
    const auto &info = edges.map.at(key);
    if (info.count == 2 && triangles[info.tris[0]].region != triangles[info.tris[1]].region) {
      out.push_back(info.ends);
    }
  }
  return out;
}

} // namespace detail

/// Throws ValidationError unless `mesh` satisfies the structural invariants.
inline void validate_mesh(const Mesh &mesh) {
  const auto n = static_cast<Index>(mesh.vertices.size());
  if (mesh.boundary.size() != mesh.vertices.size()) {
    throw ValidationError("boundary flag count does not match vertex count");
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto &tri = mesh.triangles[t];
    for (auto v : tri.v) {
      if (v < 0 || v >= n) {
        throw ValidationError("triangle " + std::to_string(t) + " references vertex " + std::to_string(v) +
                              " out of range [0, " + std::to_string(n) + ")");
      }
    }
    if (tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2]) {
      throw ValidationError("triangle " + std::to_string(t) + " repeats a vertex");
    }
    if (tri.region != 1 && tri.region != 2) {
      throw ValidationError("triangle " + std::to_string(t) + " has region tag outside {1, 2}");
    }
    if (!(signed_area(mesh.coords(tri)) > 0.0)) {
      throw ValidationError("triangle " + std::to_string(t) + " has non-positive signed area");
    }
  }
  const detail::EdgeTable edges(mesh.triangles);
  for (auto key : edges.order) {
    const auto &info = edges.map.at(key);
    if (info.count > 2) {
      throw ValidationError("edge shared by more than two triangles");
    }
    if (info.count == 2) {
      // Conforming neighbours traverse a shared edge in opposite directions.
      const auto &other = mesh.triangles[info.tris[1]].v;
      for (int e = 0; e < 3; ++e) {
        if (other[e] == info.ends[0] && other[(e + 1) % 3] == info.ends[1]) {
          throw ValidationError("neighbouring triangles have inconsistent orientation");
        }
      }
    } else if (!mesh.is_boundary(info.ends[0]) || !mesh.is_boundary(info.ends[1])) {
      throw ValidationError("unshared edge (" + std::to_string(info.ends[0]) + ", " + std::to_string(info.ends[1]) +
                            ") is not on the Dirichlet boundary (hanging node or hole)");
    }
  }
  for (const auto &e : mesh.interface_edges) {
    if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n) {
      throw ValidationError("interface edge references a vertex out of range");
    }
    const auto *info = edges.find(e[0], e[1]);
    if (info == nullptr || info->count != 2 ||
        mesh.triangles[info->tris[0]].region == mesh.triangles[info->tris[1]].region) {
      throw ValidationError("interface edge (" + std::to_string(e[0]) + ", " + std::to_string(e[1]) +
                            ") does not separate the two regions");
    }
  }
}

/// Structured right-triangle mesh of `domain` with `n` cells per side. Cells
/// are cut along the (i,j)-(i+1,j+1) diagonal. Triangles inside
/// `interface_box` get region 1, the rest region 2.
[[nodiscard]] inline MeshPtr generate_interface_mesh(int n, const Rect &domain, const Rect &interface_box) {
  if (n < 2) {
    throw InvalidSubdivision("need at least 2 subdivisions per side, got " + std::to_string(n));
  }
  if (!(domain.width() > 0.0 && domain.height() > 0.0)) {
    throw InvalidSubdivision("domain rectangle is empty");
  }
  const double dx = domain.width() / n;
  const double dy = domain.height() / n;
  constexpr double tol = 1e-9;

  auto grid_index = [&](double coord, double origin, double step, const char *which) {
    const double k = (coord - origin) / step;
    const double r = std::round(k);
    if (std::abs(k - r) > tol || r < -tol || r > n + tol) {
      std::ostringstream os;
      os << "interface box " << which << " = " << coord << " is not on a grid line of the " << n << "x" << n
         << " subdivision";
      throw InterfaceNotResolved(os.str());
    }
    return static_cast<int>(r);
  };
  const int bi0 = grid_index(interface_box.x0, domain.x0, dx, "x0");
  const int bi1 = grid_index(interface_box.x1, domain.x0, dx, "x1");
  const int bj0 = grid_index(interface_box.y0, domain.y0, dy, "y0");
  const int bj1 = grid_index(interface_box.y1, domain.y0, dy, "y1");
  if (bi0 >= bi1 || bj0 >= bj1) {
    throw InterfaceNotResolved("interface box is empty on the grid");
  }

  auto mesh = std::make_shared<Mesh>();
  const int np = n + 1;
  mesh->vertices.reserve(static_cast<std::size_t>(np) * np);
  mesh->boundary.reserve(static_cast<std::size_t>(np) * np);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      // Hit the end points exactly instead of accumulating round-off.
      const double x = (i == n) ? domain.x1 : domain.x0 + i * dx;
      const double y = (j == n) ? domain.y1 : domain.y0 + j * dy;
      mesh->vertices.push_back({x, y});
      mesh->boundary.push_back((i == 0 || j == 0 || i == n || j == n) ? 1 : 0);
    }
  }
  auto id = [np](int i, int j) { return static_cast<Index>(j * np + i); };
  mesh->triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int region = (i >= bi0 && i < bi1 && j >= bj0 && j < bj1) ? 1 : 2;
      mesh->triangles.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, region});
      mesh->triangles.push_back({{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, region});
    }
  }
  mesh->interface_edges = detail::region_boundary_edges(mesh->triangles, detail::EdgeTable(mesh->triangles));
  mesh->h = detail::max_diameter(*mesh);
  return mesh;
}

/// Red refinement: every triangle is split into four congruent children
/// through its edge midpoints.
[[nodiscard]] inline MeshPtr refine_uniform(const MeshPtr &coarse) {
  const detail::EdgeTable edges(coarse->triangles);
  const auto nc = static_cast<Index>(coarse->vertices.size());

  auto fine = std::make_shared<Mesh>();
  fine->parent = coarse;
  const std::size_t nf = coarse->vertices.size() + edges.order.size();
  fine->vertices = coarse->vertices;
  fine->boundary = coarse->boundary;
  fine->vertices.reserve(nf);
  fine->boundary.reserve(nf);
  fine->vertex_parents.reserve(nf);
  for (Index i = 0; i < nc; ++i) {
    fine->vertex_parents.push_back({i, i});
  }
  for (auto key : edges.order) {
    const auto &info = edges.map.at(key);
    const Point a = coarse->vertices[info.ends[0]];
    const Point b = coarse->vertices[info.ends[1]];
    fine->vertices.push_back(0.5 * (a + b));
    fine->boundary.push_back(info.count == 1 ? 1 : 0);
    fine->vertex_parents.push_back(info.ends);
  }

  auto mid = [&](Index a, Index b) { return nc + edges.find(a, b)->id; };
  fine->triangles.reserve(4 * coarse->triangles.size());
  for (const auto &t : coarse->triangles) {
    const auto [v0, v1, v2] = t.v;
    const Index m01 = mid(v0, v1);
    const Index m12 = mid(v1, v2);
    const Index m20 = mid(v2, v0);
    fine->triangles.push_back({{v0, m01, m20}, t.region});
    fine->triangles.push_back({{m01, v1, m12}, t.region});
    fine->triangles.push_back({{m20, m12, v2}, t.region});
    fine->triangles.push_back({{m01, m12, m20}, t.region});
  }
  fine->interface_edges.reserve(2 * coarse->interface_edges.size());
  for (const auto &e : coarse->interface_edges) {
    const Index m = mid(e[0], e[1]);
    fine->interface_edges.push_back({e[0], m});
    fine->interface_edges.push_back({m, e[1]});
  }
  fine->h = 0.5 * coarse->h;
  return fine;
}

/// Refine `levels` times; element k of the result has k refinements.
[[nodiscard]] inline std::vector<MeshPtr> refine_hierarchy(const MeshPtr &coarsest, int levels) {
  std::vector<MeshPtr> out{coarsest};
  for (int l = 1; l < levels; ++l) {
    out.push_back(refine_uniform(out.back()));
  }
  return out;
}

inline void save_mesh(const Mesh &mesh, std::ostream &os) {
  os << "vertices " << mesh.vertices.size() << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    os << mesh.vertices[i].x << ' ' << mesh.vertices[i].y << ' ' << int(mesh.boundary[i]) << '\n';
  }
  os << "triangles " << mesh.triangles.size() << '\n';
  for (const auto &t : mesh.triangles) {
    os << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.region << '\n';
  }
  os << "interface_edges " << mesh.interface_edges.size() << '\n';
  for (const auto &e : mesh.interface_edges) {
    os << e[0] << ' ' << e[1] << '\n';
  }
}

[[nodiscard]] inline std::string save_mesh(const Mesh &mesh) {
  std::ostringstream os;
  save_mesh(mesh, os);
  return os.str();
}

namespace detail {

/// Line reader that strips `#` comments and skips blank lines.
class MeshLineReader {
public:
  explicit MeshLineReader(std::istream &is) : is_(is) {}

  std::istringstream next(const char *expecting) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        return std::istringstream(line);
      }
    }
    throw ParseError(line_no_ + 1, std::string("unexpected end of input, expecting ") + expecting);
  }

  std::size_t count_header(const std::string &keyword) {
    auto ls = next(keyword.c_str());
    std::string word;
    long long count = -1;
    if (!(ls >> word >> count) || word != keyword || count < 0) {
      throw ParseError(line_no_, "expected '" + keyword + " <count>'");
    }
    expect_end(ls);
    return static_cast<std::size_t>(count);
  }

  void expect_end(std::istringstream &ls) const {
    std::string extra;
    if (ls >> extra) {
      throw ParseError(line_no_, "trailing token '" + extra + "'");
    }
  }

  [[nodiscard]] std::size_t line() const { return line_no_; }

private:
  std::istream &is_;
  std::size_t line_no_ = 0;
};

} // namespace detail

/// Parse the plain-text mesh format and validate it.
[[nodiscard]] inline MeshPtr load_mesh(std::istream &is) {
  detail::MeshLineReader reader(is);
  auto mesh = std::make_shared<Mesh>();

  const auto nv = reader.count_header("vertices");
  mesh->vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    auto ls = reader.next("vertex");
    double x = 0.0;
    double y = 0.0;
    int flag = -1;
    if (!(ls >> x >> y >> flag) || (flag != 0 && flag != 1)) {
      throw ParseError(reader.line(), "expected 'x y boundary_flag(0|1)'");
    }
    reader.expect_end(ls);
    mesh->vertices.push_back({x, y});
    mesh->boundary.push_back(static_cast<std::uint8_t>(flag));
  }
  const auto nt = reader.count_header("triangles");
  mesh->triangles.reserve(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    auto ls = reader.next("triangle");
    Triangle t;
    if (!(ls >> t.v[0] >> t.v[1] >> t.v[2] >> t.region)) {
      throw ParseError(reader.line(), "expected 'v0 v1 v2 region'");
    }
    reader.expect_end(ls);
    mesh->triangles.push_back(t);
  }
  const auto ne = reader.count_header("interface_edges");
  for (std::size_t i = 0; i < ne; ++i) {
    auto ls = reader.next("interface edge");
    Edge e{};
    if (!(ls >> e[0] >> e[1])) {
      throw ParseError(reader.line(), "expected 'va vb'");
    }
    reader.expect_end(ls);
    mesh->interface_edges.push_back(e);
  }
  validate_mesh(*mesh);
  mesh->h = detail::max_diameter(*mesh);
  return mesh;
}

[[nodiscard]] inline MeshPtr load_mesh(const std::string &text) {
  std::istringstream is(text);
  return load_mesh(is);
}

} // namespace tgfem
