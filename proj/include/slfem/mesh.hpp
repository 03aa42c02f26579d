#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace slfem {

enum class BoundaryTag : std::uint8_t { DirichletAll = 0, I, II, III, IV };

const char* to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& s);

struct BoundaryEdge {
  int a = -1;
  int b = -1;
  BoundaryTag tag = BoundaryTag::DirichletAll;
};

// Structured 2D mesh of quadrilaterals or triangles. Cells store node indices
// counterclockwise; triangles leave the fourth slot at -1. When the mesh is a
// Cartesian grid, cart_nx x cart_ny gives the cell grid and node (i,j) has
// index j*(cart_nx+1)+i.
struct Mesh {
  enum class CellKind { Quad, Triangle };

  CellKind kind = CellKind::Quad;
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 4>> cells;
  std::vector<BoundaryEdge> boundary_edges;
  int cart_nx = 0;
  int cart_ny = 0;

  int nodes_per_cell() const { return kind == CellKind::Quad ? 4 : 3; }
  int node_index(int i, int j) const { return j * (cart_nx + 1) + i; }
};

// N x N congruent squares on (0,1)^2, all boundary edges DirichletAll.
Mesh uniform_square_mesh(int N);

// (N+1) x (N+1) equal squares on (0,1)^2 with mesh-size h = 1/(N+1) and
// Cartesian node numbering exposed for spurious-mode construction.
Mesh checkerboard_partition(int N);

// Quadrilateral mesh of (0,1) x (0,2) minus the triangular notch with
// vertices (0,1/2), (1/2,1), (0,3/2). Tags: I left wall, II notch faces,
// III right wall, IV top and bottom. refine_levels uniform quadrisections of
// a 16-cell conforming coarse mesh (level 5 gives 16384 cells).
Mesh crack_mesh(int refine_levels);

// Uniform quadrisection; boundary children inherit parent tags.
Mesh refine_quadrisect(const Mesh& m);

// Splits each quadrilateral into two triangles along the (v0,v2) diagonal.
Mesh split_to_triangles(const Mesh& m);

struct MeshMetrics {
  double h_max = 0;
  double h_min = 0;
  double eta_max = 0;  // max over cells of diameter / inscribed-ball diameter
};

MeshMetrics mesh_metrics(const Mesh& m);

double cell_area(const Mesh& m, int cell);
double cell_diameter(const Mesh& m, int cell);

// Plain-text format: header "slfem-mesh <kind> <nodes> <cells> <bedges>",
// then coordinates, connectivity and tagged boundary edges.
void write_mesh_text(const Mesh& m, std::ostream& os);
Mesh read_mesh_text(std::istream& is);

}  // namespace slfem
