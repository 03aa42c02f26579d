#include "slfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace slfem {

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::DirichletAll: return "DIRICHLET_ALL";
    case BoundaryTag::I: return "I";
    case BoundaryTag::II: return "II";
    case BoundaryTag::III: return "III";
    case BoundaryTag::IV: return "IV";
  }
  return "?";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
  if (s == "DIRICHLET_ALL") return BoundaryTag::DirichletAll;
  if (s == "I") return BoundaryTag::I;
  if (s == "II") return BoundaryTag::II;
  if (s == "III") return BoundaryTag::III;
  if (s == "IV") return BoundaryTag::IV;
  throw std::invalid_argument("unknown boundary tag: " + s);
}

Mesh uniform_square_mesh(int N) {
  if (N <= 0) throw std::invalid_argument("uniform_square_mesh: N must be >= 1");
  Mesh m;
  m.kind = Mesh::CellKind::Quad;
  m.cart_nx = N;
  m.cart_ny = N;
  const double h = 1.0 / N;
  m.nodes.reserve((N + 1) * (N + 1));
  for (int j = 0; j <= N; ++j)
    for (int i = 0; i <= N; ++i) m.nodes.emplace_back(i * h, j * h);
  m.cells.reserve(N * N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i)
      m.cells.push_back({m.node_index(i, j), m.node_index(i + 1, j), m.node_index(i + 1, j + 1),
                         m.node_index(i, j + 1)});
  for (int i = 0; i < N; ++i) {
    m.boundary_edges.push_back({m.node_index(i, 0), m.node_index(i + 1, 0), BoundaryTag::DirichletAll});
    m.boundary_edges.push_back({m.node_index(i + 1, N), m.node_index(i, N), BoundaryTag::DirichletAll});
  }
  for (int j = 0; j < N; ++j) {
    m.boundary_edges.push_back({m.node_index(N, j), m.node_index(N, j + 1), BoundaryTag::DirichletAll});
    m.boundary_edges.push_back({m.node_index(0, j + 1), m.node_index(0, j), BoundaryTag::DirichletAll});
  }
  return m;
}

Mesh checkerboard_partition(int N) {
  if (N <= 0) throw std::invalid_argument("checkerboard_partition: N must be >= 1");
  return uniform_square_mesh(N + 1);
}

Mesh crack_mesh(int refine_levels) {
  if (refine_levels < 0) throw std::invalid_argument("crack_mesh: refine_levels must be >= 0");
  // Coarse blocks (2 columns wide): bottom (0,1)x(0,1/2) 2x2, mapped middle
  // 2x4 between the notch faces and x=1, top (0,1)x(3/2,2) 2x2. Uniform
  // refinement of these blocks coincides with quadrisection of the 16-cell
  // coarse mesh because the notch profile is piecewise linear with a node
  // row at the tip level y=1.
  const int s = 1 << refine_levels;
  const int nx = 2 * s;
  const int nb = 2 * s;  // rows in (0,1/2)
  const int nm = 4 * s;  // rows in (1/2,3/2)
  const int nt = 2 * s;  // rows in (3/2,2)
  const int ny = nb + nm + nt;

  auto notch_x = [](double y) {
    if (y <= 0.5 || y >= 1.5) return 0.0;
    return y <= 1.0 ? (y - 0.5) : (1.5 - y);
  };
  auto row_y = [&](int j) {
    if (j <= nb) return 0.5 * j / nb;
    if (j <= nb + nm) return 0.5 + 1.0 * (j - nb) / nm;
    return 1.5 + 0.5 * (j - nb - nm) / nt;
  };

  Mesh m;
  m.kind = Mesh::CellKind::Quad;
  m.cart_nx = nx;
  m.cart_ny = ny;
  m.nodes.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    const double y = row_y(j);
    const double x0 = notch_x(y);
    for (int i = 0; i <= nx; ++i) {
      const double xi = 1.0 * i / nx;
      m.nodes.emplace_back(x0 + xi * (1.0 - x0), y);
    }
  }
  m.cells.reserve(nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m.cells.push_back({m.node_index(i, j), m.node_index(i + 1, j), m.node_index(i + 1, j + 1),
                         m.node_index(i, j + 1)});
  for (int i = 0; i < nx; ++i) {
    m.boundary_edges.push_back({m.node_index(i, 0), m.node_index(i + 1, 0), BoundaryTag::IV});
    m.boundary_edges.push_back({m.node_index(i + 1, ny), m.node_index(i, ny), BoundaryTag::IV});
  }
  for (int j = 0; j < ny; ++j) {
    m.boundary_edges.push_back({m.node_index(nx, j), m.node_index(nx, j + 1), BoundaryTag::III});
    const BoundaryTag left = (j < nb || j >= nb + nm) ? BoundaryTag::I : BoundaryTag::II;
    m.boundary_edges.push_back({m.node_index(0, j + 1), m.node_index(0, j), left});
  }
  return m;
}

Mesh refine_quadrisect(const Mesh& m) {
  Mesh out;
  out.kind = m.kind;
  out.nodes = m.nodes;
  std::map<std::pair<int, int>, int> midpoint;
  auto edge_mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(out.nodes.size());
    out.nodes.emplace_back(0.5 * (m.nodes[a] + m.nodes[b]));
    midpoint.emplace(key, idx);
    return idx;
  };

  if (m.kind == Mesh::CellKind::Quad) {
    for (const auto& c : m.cells) {
      const int m01 = edge_mid(c[0], c[1]);
      const int m12 = edge_mid(c[1], c[2]);
      const int m23 = edge_mid(c[2], c[3]);
      const int m30 = edge_mid(c[3], c[0]);
      const int ctr = static_cast<int>(out.nodes.size());
      out.nodes.emplace_back(0.25 * (m.nodes[c[0]] + m.nodes[c[1]] + m.nodes[c[2]] + m.nodes[c[3]]));
      out.cells.push_back({c[0], m01, ctr, m30});
      out.cells.push_back({m01, c[1], m12, ctr});
      out.cells.push_back({ctr, m12, c[2], m23});
      out.cells.push_back({m30, ctr, m23, c[3]});
    }
  } else {
    for (const auto& c : m.cells) {
      const int m01 = edge_mid(c[0], c[1]);
      const int m12 = edge_mid(c[1], c[2]);
      const int m20 = edge_mid(c[2], c[0]);
      out.cells.push_back({c[0], m01, m20, -1});
      out.cells.push_back({m01, c[1], m12, -1});
      out.cells.push_back({m20, m12, c[2], -1});
      out.cells.push_back({m01, m12, m20, -1});
    }
  }
  for (const auto& e : m.boundary_edges) {
    const int mid = edge_mid(e.a, e.b);
    out.boundary_edges.push_back({e.a, mid, e.tag});
    out.boundary_edges.push_back({mid, e.b, e.tag});
  }
  // Node numbering is no longer Cartesian after refinement.
  return out;
}

Mesh split_to_triangles(const Mesh& m) {
  if (m.kind != Mesh::CellKind::Quad)
    throw std::invalid_argument("split_to_triangles: expected a quad mesh");
  Mesh out;
  out.kind = Mesh::CellKind::Triangle;
  out.nodes = m.nodes;
  out.boundary_edges = m.boundary_edges;
  out.cells.reserve(2 * m.cells.size());
  for (const auto& c : m.cells) {
    out.cells.push_back({c[0], c[1], c[2], -1});
    out.cells.push_back({c[0], c[2], c[3], -1});
  }
  return out;
}

double cell_area(const Mesh& m, int cell) {
  const auto& c = m.cells[cell];
  const int n = m.nodes_per_cell();
  double a = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto& p = m.nodes[c[k]];
    const auto& q = m.nodes[c[(k + 1) % n]];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double cell_diameter(const Mesh& m, int cell) {
  const auto& c = m.cells[cell];
  const int n = m.nodes_per_cell();
  double d2 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      d2 = std::max(d2, (m.nodes[c[i]] - m.nodes[c[j]]).squaredNorm());
  return std::sqrt(d2);
}

MeshMetrics mesh_metrics(const Mesh& m) {
  MeshMetrics metrics;
  metrics.h_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(m.cells.size()); ++k) {
    const double area = cell_area(m, k);
    if (!(area > 0.0)) throw std::runtime_error("mesh_metrics: degenerate cell");
    const auto& c = m.cells[k];
    const int n = m.nodes_per_cell();
    double perim = 0.0;
    for (int i = 0; i < n; ++i) perim += (m.nodes[c[i]] - m.nodes[c[(i + 1) % n]]).norm();
    const double h = cell_diameter(m, k);
    const double rho = 4.0 * area / perim;  // inscribed-ball diameter (exact for squares/triangles)
    metrics.h_max = std::max(metrics.h_max, h);
    metrics.h_min = std::min(metrics.h_min, h);
    metrics.eta_max = std::max(metrics.eta_max, h / rho);
  }
  return metrics;
}

void write_mesh_text(const Mesh& m, std::ostream& os) {
  os << "slfem-mesh " << (m.kind == Mesh::CellKind::Quad ? "quad" : "triangle") << ' '
     << m.nodes.size() << ' ' << m.cells.size() << ' ' << m.boundary_edges.size() << '\n';
  char buf[80];
  for (const auto& p : m.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    os << buf;
  }
  const int n = m.nodes_per_cell();
  for (const auto& c : m.cells) {
    for (int k = 0; k < n; ++k) os << c[k] << (k + 1 == n ? '\n' : ' ');
  }
  for (const auto& e : m.boundary_edges) os << e.a << ' ' << e.b << ' ' << to_string(e.tag) << '\n';
}

Mesh read_mesh_text(std::istream& is) {
  std::string magic, kind;
  std::size_t nn, nc, ne;
  is >> magic >> kind >> nn >> nc >> ne;
  if (magic != "slfem-mesh") throw std::runtime_error("read_mesh_text: bad header");
  Mesh m;
  m.kind = kind == "quad" ? Mesh::CellKind::Quad : Mesh::CellKind::Triangle;
  m.nodes.resize(nn);
  for (auto& p : m.nodes) is >> p.x() >> p.y();
  m.cells.resize(nc, {-1, -1, -1, -1});
  const int n = m.nodes_per_cell();
  for (auto& c : m.cells)
    for (int k = 0; k < n; ++k) is >> c[k];
  m.boundary_edges.resize(ne);
  for (auto& e : m.boundary_edges) {
    std::string tag;
    is >> e.a >> e.b >> tag;
    e.tag = boundary_tag_from_string(tag);
  }
  if (!is) throw std::runtime_error("read_mesh_text: truncated input");
  return m;
}

}  // namespace slfem
