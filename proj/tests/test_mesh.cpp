#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "slfem/mesh.hpp"
#include "slfem/vtk.hpp"

using namespace slfem;

TEST_CASE("uniform square mesh counting") {
  const Mesh m4 = uniform_square_mesh(4);
  CHECK(m4.cells.size() == 16);
  CHECK(m4.nodes.size() == 25);
  CHECK(uniform_square_mesh(2).boundary_edges.size() == 8);
  CHECK_THROWS_AS(uniform_square_mesh(0), std::invalid_argument);

  const Mesh m128 = uniform_square_mesh(128);
  const MeshMetrics mm = mesh_metrics(m128);
  CHECK(mm.h_max == doctest::Approx(std::sqrt(2.0) / 128.0).epsilon(1e-14));
  CHECK(mm.h_min == doctest::Approx(mm.h_max).epsilon(1e-14));
  CHECK(mm.eta_max == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("checkerboard partition") {
  CHECK(checkerboard_partition(1).cells.size() == 4);
  const Mesh m3 = checkerboard_partition(3);
  CHECK(mesh_metrics(m3).h_max == doctest::Approx(std::sqrt(2.0) / 4.0));
  const Mesh m7 = checkerboard_partition(7);
  CHECK(m7.cells.size() == 64);
  int interior = 0;
  std::set<int> boundary_nodes;
  for (const auto& e : m7.boundary_edges) {
    boundary_nodes.insert(e.a);
    boundary_nodes.insert(e.b);
  }
  interior = static_cast<int>(m7.nodes.size() - boundary_nodes.size());
  CHECK(interior == 49);
}

TEST_CASE("crack mesh statistics and tags") {
  const Mesh m = crack_mesh(5);
  CHECK(m.cells.size() == 16384);
  const MeshMetrics mm = mesh_metrics(m);
  CHECK(std::abs(mm.h_min - 0.011) / 0.011 < 0.10);

  std::set<int> tags;
  for (const auto& e : m.boundary_edges) tags.insert(static_cast<int>(e.tag));
  CHECK(tags == std::set<int>{static_cast<int>(BoundaryTag::I), static_cast<int>(BoundaryTag::II),
                              static_cast<int>(BoundaryTag::III),
                              static_cast<int>(BoundaryTag::IV)});

  // notch tip is a mesh node at every level
  for (int level : {0, 1, 2, 3}) {
    const Mesh ml = crack_mesh(level);
    bool found = false;
    for (const auto& p : ml.nodes)
      if ((p - Eigen::Vector2d(0.5, 1.0)).norm() < 1e-14) found = true;
    CHECK(found);
  }

  // conforming: every interior edge shared by exactly two cells
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& c : m.cells)
    for (int k = 0; k < 4; ++k) {
      const auto key = std::minmax(c[k], c[(k + 1) % 4]);
      edge_count[key]++;
    }
  std::set<std::pair<int, int>> boundary;
  for (const auto& e : m.boundary_edges) boundary.insert(std::minmax(e.a, e.b));
  for (const auto& [edge, count] : edge_count) {
    if (boundary.count(edge)) {
      CHECK(count == 1);
    } else {
      CHECK(count == 2);
    }
  }

  // notch faces carry tag II and lie on the two face lines
  for (const auto& e : m.boundary_edges) {
    if (e.tag != BoundaryTag::II) continue;
    for (int node : {e.a, e.b}) {
      const auto& p = m.nodes[node];
      const double d1 = std::abs(p.y() - (p.x() + 0.5));
      const double d2 = std::abs(p.y() - (1.5 - p.x()));
      CHECK(std::min(d1, d2) < 1e-13);
    }
  }
}

TEST_CASE("refinement halves mesh sizes and preserves tags") {
  const Mesh u = uniform_square_mesh(3);
  const MeshMetrics u0 = mesh_metrics(u);
  const MeshMetrics u1 = mesh_metrics(refine_quadrisect(u));
  CHECK(u1.h_max == doctest::Approx(0.5 * u0.h_max).epsilon(1e-13));
  CHECK(u1.h_min == doctest::Approx(0.5 * u0.h_min).epsilon(1e-13));

  Mesh m = crack_mesh(0);
  const Mesh r = refine_quadrisect(m);
  const MeshMetrics m1 = mesh_metrics(r);
  CHECK(r.boundary_edges.size() == 2 * m.boundary_edges.size());

  std::map<int, int> tag_count_parent, tag_count_child;
  for (const auto& e : m.boundary_edges) tag_count_parent[static_cast<int>(e.tag)]++;
  for (const auto& e : r.boundary_edges) tag_count_child[static_cast<int>(e.tag)]++;
  for (const auto& [tag, count] : tag_count_parent) CHECK(tag_count_child[tag] == 2 * count);

  // direct construction coincides with quadrisection of the coarse mesh
  const Mesh direct = crack_mesh(1);
  CHECK(direct.cells.size() == r.cells.size());
  CHECK(mesh_metrics(direct).h_min == doctest::Approx(m1.h_min).epsilon(1e-13));
  CHECK(mesh_metrics(direct).h_max == doctest::Approx(m1.h_max).epsilon(1e-13));
}

TEST_CASE("triangle split") {
  const Mesh q = uniform_square_mesh(3);
  const Mesh t = split_to_triangles(q);
  CHECK(t.cells.size() == 2 * q.cells.size());
  CHECK(t.kind == Mesh::CellKind::Triangle);
  double area = 0;
  for (int k = 0; k < static_cast<int>(t.cells.size()); ++k) area += cell_area(t, k);
  CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("single-cell metrics") {
  const Mesh m = uniform_square_mesh(1);
  const MeshMetrics mm = mesh_metrics(m);
  CHECK(mm.h_max == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("mesh text round trip") {
  const Mesh m = crack_mesh(1);
  std::ostringstream os;
  write_mesh_text(m, os);
  std::istringstream is(os.str());
  const Mesh r = read_mesh_text(is);
  CHECK(r.nodes.size() == m.nodes.size());
  CHECK(r.cells.size() == m.cells.size());
  CHECK(r.boundary_edges.size() == m.boundary_edges.size());
  std::ostringstream os2;
  write_mesh_text(r, os2);
  CHECK(os.str() == os2.str());
}

TEST_CASE("vtk writer determinism and round trip") {
  const Mesh m = uniform_square_mesh(3);
  VtkField node_scalar{"u_mag", 1, std::vector<double>(m.nodes.size(), 0.0)};
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    node_scalar.data[i] = m.nodes[i].squaredNorm() / 3.0;
  VtkField cell_scalar{"stress_mag", 1, std::vector<double>(m.cells.size(), 1.25)};

  std::ostringstream os;
  write_vtk(m, {node_scalar}, {cell_scalar}, os);

  // geometry-only export is valid and parses back
  std::ostringstream geom;
  write_vtk(m, {}, {}, geom);
  std::istringstream gis(geom.str());
  const VtkDataSet gds = read_vtk(gis);
  CHECK(gds.mesh.nodes.size() == m.nodes.size());

  // re-export of an imported file is byte-identical
  std::istringstream is(os.str());
  const VtkDataSet ds = read_vtk(is);
  REQUIRE(ds.point_fields.size() == 1);
  REQUIRE(ds.cell_fields.size() == 1);
  std::ostringstream os2;
  write_vtk(ds.mesh, ds.point_fields, ds.cell_fields, os2);
  CHECK(os.str() == os2.str());
}
