#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "slfem/mesh.hpp"

namespace slfem {

// Named point or cell data attached to a VTK export; components is 1
// (SCALARS) or 3 (VECTORS, 2D vectors padded with a zero z entry on write).
struct VtkField {
  std::string name;
  int components = 1;
  std::vector<double> data;  // length = entities * components
};

struct VtkDataSet {
  Mesh mesh;
  std::vector<VtkField> point_fields;
  std::vector<VtkField> cell_fields;
};

// VTK legacy ASCII 3.0 unstructured grid; deterministic byte output.
void write_vtk(const Mesh& m, const std::vector<VtkField>& point_fields,
               const std::vector<VtkField>& cell_fields, std::ostream& os,
               const std::string& title = "slfem");
void write_vtk_file(const Mesh& m, const std::vector<VtkField>& point_fields,
                    const std::vector<VtkField>& cell_fields, const std::string& path,
                    const std::string& title = "slfem");

// Reads the subset of legacy VTK produced by write_vtk.
VtkDataSet read_vtk(std::istream& is);

}  // namespace slfem
