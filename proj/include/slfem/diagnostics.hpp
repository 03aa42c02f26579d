#pragma once

#include <string>
#include <vector>

#include "slfem/fem.hpp"

namespace slfem {

struct InfSupReport {
  double h = 0;
  double ratio = 0;
  double n = 1;
  std::string pair;  // "P0/P1", "Q0/Q1", ...
};

// b(T_h, v_h) / (||T_h||_{L_{1+1/n}} ||eps(v_h)||_{L_{n+1}}) with the
// supremizer stress built cellwise: eps(v_h)|eps(v_h)|^{n-1} on simplicial
// P0/P1, and the cell-average construction
//   T_h = |K|^{-n} (int_K eps(v_h)) |int_K eps(v_h)|^{n-1}
// on the Q0/Q1 pair. Throws on a zero strain field.
double supremizer_ratio(const FunctionSpaces& sp, const DisplacementField& v, double n);

// Alternating +-1 nodal displacement (both components) on the interior of a
// Cartesian-numbered mesh, zero on the boundary: value +1 when i+j is odd,
// -1 when even.
DisplacementField checkerboard_mode(const FunctionSpaces& sp);

// Boundary-only supremizer quotient for the checkerboard mode: the stress is
// set to zero on interior cells and to the cell-average construction on
// boundary cells.
double checkerboard_quotient(const FunctionSpaces& sp, const DisplacementField& v, double n);

struct CheckerboardStudy {
  std::vector<InfSupReport> reports;
  double fitted_exponent = 0;  // least-squares slope of log(ratio) vs log(h)
};

CheckerboardStudy checkerboard_decay_study(const std::vector<int>& N_values, double n);

// Experimental order of convergence log2(e_coarse / e_fine); NaN when either
// error sits at round-off and the quotient is meaningless.
double eoc(double e_coarse, double e_fine);
std::vector<double> eoc_column(const std::vector<double>& errors);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Integral of eps(v) over one cell.
SymTensor2 cell_strain_average_integral(const FunctionSpaces& sp, const DisplacementField& v,
                                        int cell);

// Cells with at least one node on the mesh boundary.
std::vector<char> boundary_cell_mask(const Mesh& m);

}  // namespace slfem
