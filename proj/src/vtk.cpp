#include "slfem/vtk.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace slfem {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_fields(const std::vector<VtkField>& fields, std::size_t count, std::ostream& os) {
  for (const auto& f : fields) {
    if (f.components == 1) {
      if (f.data.size() != count) throw std::invalid_argument("write_vtk: field length mismatch");
      os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.data) os << fmt(v) << '\n';
    } else if (f.components == 3) {
      if (f.data.size() != 3 * count)
        throw std::invalid_argument("write_vtk: field length mismatch");
      os << "VECTORS " << f.name << " double\n";
      for (std::size_t i = 0; i < count; ++i)
        os << fmt(f.data[3 * i]) << ' ' << fmt(f.data[3 * i + 1]) << ' ' << fmt(f.data[3 * i + 2])
           << '\n';
    } else {
      throw std::invalid_argument("write_vtk: components must be 1 or 3");
    }
  }
}

}  // namespace

void write_vtk(const Mesh& m, const std::vector<VtkField>& point_fields,
               const std::vector<VtkField>& cell_fields, std::ostream& os,
               const std::string& title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << m.nodes.size() << " double\n";
  for (const auto& p : m.nodes) os << fmt(p.x()) << ' ' << fmt(p.y()) << " 0\n";
  const int npc = m.nodes_per_cell();
  os << "CELLS " << m.cells.size() << ' ' << m.cells.size() * (npc + 1) << '\n';
  for (const auto& c : m.cells) {
    os << npc;
    for (int k = 0; k < npc; ++k) os << ' ' << c[k];
    os << '\n';
  }
  os << "CELL_TYPES " << m.cells.size() << '\n';
  const int vtk_type = m.kind == Mesh::CellKind::Quad ? 9 : 5;
  for (std::size_t i = 0; i < m.cells.size(); ++i) os << vtk_type << '\n';
  if (!point_fields.empty()) {
    os << "POINT_DATA " << m.nodes.size() << '\n';
    write_fields(point_fields, m.nodes.size(), os);
  }
  if (!cell_fields.empty()) {
    os << "CELL_DATA " << m.cells.size() << '\n';
    write_fields(cell_fields, m.cells.size(), os);
  }
}

void write_vtk_file(const Mesh& m, const std::vector<VtkField>& point_fields,
                    const std::vector<VtkField>& cell_fields, const std::string& path,
                    const std::string& title) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_vtk_file: cannot open " + path);
  write_vtk(m, point_fields, cell_fields, os, title);
  if (!os) throw std::runtime_error("write_vtk_file: write failed for " + path);
}

VtkDataSet read_vtk(std::istream& is) {
  VtkDataSet ds;
  std::string line;
  std::getline(is, line);  // version comment
  std::getline(is, line);  // title
  std::string word;
  is >> word;  // ASCII
  is >> word >> word;  // DATASET UNSTRUCTURED_GRID

  auto read_field_block = [&](std::vector<VtkField>& fields, std::size_t count) {
    while (is >> word) {
      if (word == "POINT_DATA" || word == "CELL_DATA") return word;
      VtkField f;
      if (word == "SCALARS") {
        std::string type;
        is >> f.name >> type >> f.components;
        is >> word >> word;  // LOOKUP_TABLE default
        f.data.resize(count);
        for (auto& v : f.data) is >> v;
      } else if (word == "VECTORS") {
        std::string type;
        is >> f.name >> type;
        f.components = 3;
        f.data.resize(3 * count);
        for (auto& v : f.data) is >> v;
      } else {
        throw std::runtime_error("read_vtk: unexpected token " + word);
      }
      fields.push_back(std::move(f));
    }
    return std::string();
  };

  std::size_t n = 0;
  while (is >> word) {
    if (word == "POINTS") {
      std::string type;
      is >> n >> type;
      ds.mesh.nodes.resize(n);
      for (auto& p : ds.mesh.nodes) {
        double z;
        is >> p.x() >> p.y() >> z;
      }
    } else if (word == "CELLS") {
      std::size_t nc, total;
      is >> nc >> total;
      ds.mesh.cells.assign(nc, {-1, -1, -1, -1});
      int npc = 0;
      for (auto& c : ds.mesh.cells) {
        is >> npc;
        for (int k = 0; k < npc; ++k) is >> c[k];
      }
      ds.mesh.kind = npc == 4 ? Mesh::CellKind::Quad : Mesh::CellKind::Triangle;
    } else if (word == "CELL_TYPES") {
      std::size_t nc;
      is >> nc;
      int t;
      for (std::size_t i = 0; i < nc; ++i) is >> t;
    } else if (word == "POINT_DATA") {
      std::size_t cnt;
      is >> cnt;
      std::string next = read_field_block(ds.point_fields, cnt);
      if (next == "CELL_DATA") {
        is >> cnt;
        read_field_block(ds.cell_fields, cnt);
      }
      break;
    } else if (word == "CELL_DATA") {
      std::size_t cnt;
      is >> cnt;
      read_field_block(ds.cell_fields, cnt);
      break;
    }
  }
  return ds;
}

}  // namespace slfem
