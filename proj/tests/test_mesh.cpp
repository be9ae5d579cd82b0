#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "tgfem/mesh.hpp"
#include "tgfem/mesh_audit.hpp"

using namespace tgfem;

namespace {

const Rect kDomain{-1.0, 1.0, -1.0, 1.0};
const Rect kBox{-0.5, 0.5, -0.5, 0.5};

bool on_segment(Point p, Point a, Point b) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
  const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
  return std::abs(cross) < 1e-12 && dot >= -1e-12 && dot <= len2 + 1e-12;
}

} // namespace

TEST(GenerateMesh, CountsForFourSubdivisions) {
  const auto m = generate_interface_mesh(4, kDomain, kBox);
  EXPECT_EQ(m->num_vertices(), 25u);
  EXPECT_EQ(m->num_triangles(), 32u);
  EXPECT_EQ(m->interface_edges.size(), 8u);
  EXPECT_EQ(m->boundary_vertices().size(), 16u);
}

TEST(GenerateMesh, InteriorCellsAreRegionOne) {
  const auto m = generate_interface_mesh(4, kDomain, kBox);
  const auto inside = std::count_if(m->triangles.begin(), m->triangles.end(),
                                    [](const Triangle &t) { return t.region == 1; });
  EXPECT_EQ(inside, 8);
  for (const auto &t : m->triangles) {
    if (t.region != 1) {
      continue;
    }
    for (const auto &p : m->coords(t)) {
      EXPECT_LE(std::abs(p.x), 0.5 + 1e-15);
      EXPECT_LE(std::abs(p.y), 0.5 + 1e-15);
    }
  }
}

TEST(GenerateMesh, MeshSizeIsCellDiagonal) {
  const auto m = generate_interface_mesh(8, kDomain, kBox);
  EXPECT_NEAR(m->h, std::sqrt(2.0) * 0.25, 1e-15);
}

TEST(GenerateMesh, MisalignedBoxRejected) {
  EXPECT_THROW((void)generate_interface_mesh(3, kDomain, kBox), InterfaceNotResolved);
}

TEST(GenerateMesh, TooFewSubdivisions) {
  EXPECT_THROW((void)generate_interface_mesh(1, kDomain, {-1.0, 0.0, -1.0, 1.0}), InvalidSubdivision);
  EXPECT_THROW((void)generate_interface_mesh(0, kDomain, kBox), InvalidSubdivision);
}

TEST(GenerateMesh, GeneratedMeshValidates) {
  for (int n : {4, 8, 12, 20}) {
    EXPECT_NO_THROW(validate_mesh(*generate_interface_mesh(n, kDomain, kBox))) << n;
  }
  EXPECT_NO_THROW(validate_mesh(*generate_interface_mesh(4, kDomain, {-1.0, 0.0, -1.0, 1.0})));
}

TEST(GenerateMesh, VerticalInterfaceEdges) {
  const auto m = generate_interface_mesh(4, kDomain, {-1.0, 0.0, -1.0, 1.0});
  ASSERT_EQ(m->interface_edges.size(), 4u);
  for (const auto &e : m->interface_edges) {
    EXPECT_EQ(m->vertices[e[0]].x, 0.0);
    EXPECT_EQ(m->vertices[e[1]].x, 0.0);
  }
}

TEST(RefineUniform, Counts) {
  const auto fine = refine_uniform(generate_interface_mesh(4, kDomain, kBox));
  EXPECT_EQ(fine->num_triangles(), 128u);
  EXPECT_EQ(fine->num_vertices(), 81u);
  EXPECT_EQ(fine->interface_edges.size(), 16u);
  EXPECT_NO_THROW(validate_mesh(*fine));
}

TEST(RefineUniform, MeshSizeHalves) {
  const auto m0 = generate_interface_mesh(4, kDomain, kBox);
  const auto m2 = refine_uniform(refine_uniform(m0));
  EXPECT_DOUBLE_EQ(m2->h, 0.25 * m0->h);
  EXPECT_NEAR(detail::max_diameter(*m2), m2->h, 1e-15);
}

TEST(RefineUniform, RegionTagsInherited) {
  const auto m0 = generate_interface_mesh(4, kDomain, kBox);
  const auto m1 = refine_uniform(m0);
  for (std::size_t t = 0; t < m0->num_triangles(); ++t) {
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_EQ(m1->triangles[4 * t + c].region, m0->triangles[t].region);
    }
  }
}

TEST(RefineUniform, NewVerticesAreEdgeMidpoints) {
  const auto m0 = generate_interface_mesh(4, kDomain, kBox);
  const auto m1 = refine_uniform(m0);
  EXPECT_EQ(m1->parent, m0);
  for (std::size_t i = 0; i < m1->num_vertices(); ++i) {
    const auto &pp = m1->vertex_parents[i];
    const Point mid = 0.5 * (m0->vertices[pp[0]] + m0->vertices[pp[1]]);
    EXPECT_EQ(m1->vertices[i], mid);
    if (i < m0->num_vertices()) {
      EXPECT_EQ(pp[0], static_cast<Index>(i));
      EXPECT_EQ(pp[1], static_cast<Index>(i));
    }
  }
}

TEST(RefineUniform, AreaSumMatchesDomainAtEveryLevel) {
  auto m = generate_interface_mesh(4, kDomain, kBox);
  for (int l = 0; l < 6; ++l) {
    EXPECT_NEAR(m->total_area(), kDomain.area(), 1e-12 * kDomain.area()) << l;
    m = refine_uniform(m);
  }
}

TEST(RefineUniform, FineInterfaceInsideCoarseInterface) {
  const auto m0 = generate_interface_mesh(4, kDomain, kBox);
  const auto m1 = refine_uniform(m0);
  for (const auto &fe : m1->interface_edges) {
    const bool found = std::any_of(m0->interface_edges.begin(), m0->interface_edges.end(), [&](const Edge &ce) {
      const Point a = m0->vertices[ce[0]];
      const Point b = m0->vertices[ce[1]];
      return on_segment(m1->vertices[fe[0]], a, b) && on_segment(m1->vertices[fe[1]], a, b);
    });
    EXPECT_TRUE(found);
  }
}

TEST(RefineHierarchy, DepthsAndLength) {
  const auto ms = refine_hierarchy(generate_interface_mesh(4, kDomain, kBox), 4);
  ASSERT_EQ(ms.size(), 4u);
  EXPECT_EQ(ms[3]->depth_below(*ms[0]), 3);
  EXPECT_EQ(ms[0]->depth_below(*ms[3]), -1);
}

TEST(AngleCondition, StructuredMeshesPassForAnyContrast) {
  for (const std::array<double, 2> d : {std::array{1.0, 1.0}, std::array{1000.0, 1.0}, std::array{2.0, 80.0},
                                        std::array{1e-3, 5.0}}) {
    auto m = generate_interface_mesh(4, kDomain, kBox);
    for (int l = 0; l < 4; ++l) {
      const auto r = check_angle_condition(*m, d);
      EXPECT_TRUE(r.passes);
      EXPECT_TRUE(r.violating_pairs.empty());
      EXPECT_LE(r.worst_offdiag, r.tolerance);
      m = refine_uniform(m);
    }
  }
}

TEST(AngleCondition, ObtuseTriangleIsReported) {
  // Fan around an interior vertex with one very flat obtuse triangle.
  Mesh m;
  m.vertices = {{0.0, 0.0}, {4.0, 0.0}, {3.9, 0.2}, {2.0, 3.0}};
  m.boundary = {1, 1, 1, 1};
  m.triangles = {{{0, 1, 2}, 1}, {{0, 2, 3}, 1}};
  validate_mesh(m);
  const auto r = check_angle_condition(m, {1.0, 1.0});
  EXPECT_FALSE(r.passes);
  ASSERT_FALSE(r.violating_pairs.empty());
  EXPECT_GT(r.worst_offdiag, r.tolerance);
  // The angle at vertex 2 of triangle (0,1,2) is obtuse, so the opposite edge (0,1) couples positively.
  const Edge expected{0, 1};
  EXPECT_NE(std::find(r.violating_pairs.begin(), r.violating_pairs.end(), expected), r.violating_pairs.end());
  for (const auto &e : r.violating_pairs) {
    EXPECT_LT(e[0], e[1]);
  }
}

TEST(AngleCondition, EmptyViolationsIffPasses) {
  const auto m = generate_interface_mesh(4, kDomain, kBox);
  const auto r = check_angle_condition(*m, {3.0, 7.0});
  EXPECT_EQ(r.passes, r.violating_pairs.empty());
}

TEST(MeshIo, RoundTrip) {
  const auto m = refine_uniform(generate_interface_mesh(4, kDomain, kBox));
  const auto text = save_mesh(*m);
  const auto back = load_mesh(text);
  EXPECT_EQ(back->vertices, m->vertices);
  EXPECT_EQ(back->boundary, m->boundary);
  EXPECT_EQ(back->interface_edges, m->interface_edges);
  ASSERT_EQ(back->num_triangles(), m->num_triangles());
  for (std::size_t t = 0; t < m->num_triangles(); ++t) {
    EXPECT_EQ(back->triangles[t].v, m->triangles[t].v);
    EXPECT_EQ(back->triangles[t].region, m->triangles[t].region);
  }
  EXPECT_DOUBLE_EQ(back->h, m->h);
  EXPECT_EQ(save_mesh(*back), text);
}

TEST(MeshIo, RoundTripKeepsFullPrecision) {
  const auto m = generate_interface_mesh(6, {-1.0, 1.0, -1.0, 1.0}, {-1.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0});
  EXPECT_EQ(load_mesh(save_mesh(*m))->vertices, m->vertices);
}

TEST(MeshIo, CommentsAndBlankLines) {
  const std::string text = "# tiny mesh\n"
                           "vertices 3\n"
                           "0 0 1   # corner\n"
                           "1 0 1\n"
                           "\n"
                           "0 1 1\n"
                           "triangles 1\n"
                           "0 1 2 2\n"
                           "interface_edges 0\n";
  const auto m = load_mesh(text);
  EXPECT_EQ(m->num_triangles(), 1u);
  EXPECT_NEAR(m->total_area(), 0.5, 1e-15);
}

TEST(MeshIo, VertexIndexOutOfRange) {
  const std::string text = "vertices 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 1 3 2\ninterface_edges 0\n";
  EXPECT_THROW((void)load_mesh(text), ValidationError);
}

TEST(MeshIo, NegativeAreaRejected) {
  const std::string text = "vertices 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 2 1 2\ninterface_edges 0\n";
  EXPECT_THROW((void)load_mesh(text), ValidationError);
}

TEST(MeshIo, HangingNodeRejected) {
  // Vertex 4 sits on the middle of edge (1,2) but only one side is split.
  const std::string text = "vertices 5\n"
                           "0 0 1\n2 0 1\n0 2 1\n2 2 1\n1 1 0\n"
                           "triangles 3\n"
                           "0 1 4 2\n0 4 2 2\n1 3 2 2\n"
                           "interface_edges 0\n";
  EXPECT_THROW((void)load_mesh(text), ValidationError);
}

TEST(MeshIo, ParseErrorsCarryLineNumbers) {
  try {
    (void)load_mesh("vertices 2\n0 0 1\n0 zero 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    (void)load_mesh("# header\nvertices 1\n0 0 1\ntriangle 0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW((void)load_mesh("vertices 1\n0 0 2\n"), ParseError);
  EXPECT_THROW((void)load_mesh("vertices 1\n0 0 1\n"), ParseError);
}

TEST(MeshIo, BadRegionTagRejected) {
  const std::string text = "vertices 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 1 2 3\ninterface_edges 0\n";
  EXPECT_THROW((void)load_mesh(text), ValidationError);
}

TEST(MeshIo, InterfaceEdgeMustSeparateRegions) {
  const auto m = generate_interface_mesh(4, kDomain, kBox);
  auto text = save_mesh(*m);
  // Replace the interface list with a boundary edge.
  text = text.substr(0, text.find("interface_edges")) + "interface_edges 1\n0 1\n";
  EXPECT_THROW((void)load_mesh(text), ValidationError);
}
