#include "slfem/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace slfem {

namespace {

// || eps(v) ||_{L_q} by quadrature (|eps|^q is not polynomial for general q).
double strain_lq_norm(const FunctionSpaces& sp, const DisplacementField& v, double q) {
  const Mesh& m = *sp.mesh;
  const auto& rule = m.kind == Mesh::CellKind::Quad ? quad_rule(5) : tri_rule(5);
  double acc = 0.0;
  for (int cell = 0; cell < sp.n_cells(); ++cell)
    for (const auto& qp : rule) {
      const ElemPoint ep = elem_point(m, cell, qp.xi, qp.eta, qp.w);
      const Eigen::Matrix2d g = grad_u_at(sp, v, cell, qp.xi, qp.eta);
      const SymTensor2 eps = SymTensor2::from_matrix(g);
      acc += ep.jxw * std::pow(frobenius_norm(eps), q);
    }
  return std::pow(acc, 1.0 / q);
}

}  // namespace

SymTensor2 cell_strain_average_integral(const FunctionSpaces& sp, const DisplacementField& v,
                                        int cell) {
  const Mesh& m = *sp.mesh;
  const auto& rule = m.kind == Mesh::CellKind::Quad ? quad_rule(3) : tri_rule(2);
  SymTensor2 acc;
  for (const auto& qp : rule) {
    const ElemPoint ep = elem_point(m, cell, qp.xi, qp.eta, qp.w);
    acc += SymTensor2::from_matrix(grad_u_at(sp, v, cell, qp.xi, qp.eta)) * ep.jxw;
  }
  return acc;
}

std::vector<char> boundary_cell_mask(const Mesh& m) {
  std::vector<char> node_on_boundary(m.nodes.size(), 0);
  for (const auto& e : m.boundary_edges) {
    node_on_boundary[e.a] = 1;
    node_on_boundary[e.b] = 1;
  }
  std::vector<char> mask(m.cells.size(), 0);
  for (std::size_t k = 0; k < m.cells.size(); ++k)
    for (int a = 0; a < m.nodes_per_cell(); ++a)
      if (node_on_boundary[m.cells[k][a]]) mask[k] = 1;
  return mask;
}

double supremizer_ratio(const FunctionSpaces& sp, const DisplacementField& v, double n) {
  const Mesh& m = *sp.mesh;
  const double q_stress = 1.0 + 1.0 / n;
  const double q_strain = n + 1.0;

  if (m.kind == Mesh::CellKind::Triangle) {
    // eps(v) is cellwise constant and the supremizer R = eps|eps|^{n-1}
    // belongs to the stress space; everything is exact cellwise.
    double b = 0.0, normR = 0.0, normE = 0.0;
    for (int cell = 0; cell < sp.n_cells(); ++cell) {
      const Eigen::Matrix2d g = grad_u_at(sp, v, cell, 1.0 / 3.0, 1.0 / 3.0);
      const double e = frobenius_norm(SymTensor2::from_matrix(g));
      const double area = sp.cell_areas[cell];
      b += area * std::pow(e, n + 1.0);
      normR += area * std::pow(e, n * q_stress);
      normE += area * std::pow(e, q_strain);
    }
    if (normE <= 0.0) throw std::invalid_argument("supremizer_ratio: zero strain field");
    return b / (std::pow(normR, 1.0 / q_stress) * std::pow(normE, 1.0 / q_strain));
  }

  // Q0/Q1 pair: cell-average construction.
  double B = 0.0;
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    const SymTensor2 A = cell_strain_average_integral(sp, v, cell);
    B += std::pow(frobenius_norm(A), n + 1.0) / std::pow(sp.cell_areas[cell], n);
  }
  const double strain_norm = strain_lq_norm(sp, v, q_strain);
  if (strain_norm <= 0.0) throw std::invalid_argument("supremizer_ratio: zero strain field");
  return std::pow(B, 1.0 / (n + 1.0)) / strain_norm;
}

DisplacementField checkerboard_mode(const FunctionSpaces& sp) {
  const Mesh& m = *sp.mesh;
  if (m.cart_nx <= 0 || m.cart_ny <= 0)
    throw std::invalid_argument("checkerboard_mode: mesh lacks Cartesian numbering");
  DisplacementField v = make_displacement(sp);
  for (int j = 1; j < m.cart_ny; ++j)
    for (int i = 1; i < m.cart_nx; ++i) {
      const double s = ((i + j) % 2 == 1) ? 1.0 : -1.0;
      const int node = m.node_index(i, j);
      v.values[2 * node] = s;
      v.values[2 * node + 1] = s;
    }
  return v;
}

double checkerboard_quotient(const FunctionSpaces& sp, const DisplacementField& v, double n) {
  const auto mask = boundary_cell_mask(*sp.mesh);
  double B = 0.0;
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    if (!mask[cell]) continue;
    const SymTensor2 A = cell_strain_average_integral(sp, v, cell);
    B += std::pow(frobenius_norm(A), n + 1.0) / std::pow(sp.cell_areas[cell], n);
  }
  const double strain_norm = strain_lq_norm(sp, v, n + 1.0);
  if (strain_norm <= 0.0) throw std::invalid_argument("checkerboard_quotient: zero strain");
  return std::pow(B, 1.0 / (n + 1.0)) / strain_norm;
}

CheckerboardStudy checkerboard_decay_study(const std::vector<int>& N_values, double n) {
  CheckerboardStudy study;
  std::vector<double> hs, ratios;
  for (int N : N_values) {
    const Mesh mesh = checkerboard_partition(N);
    const FunctionSpaces sp = make_spaces(mesh, StressSpace::P0, {BoundaryTag::DirichletAll});
    const DisplacementField v = checkerboard_mode(sp);
    InfSupReport rep;
    rep.h = 1.0 / (N + 1);
    rep.n = n;
    rep.pair = "Q0/Q1";
    rep.ratio = checkerboard_quotient(sp, v, n);
    study.reports.push_back(rep);
    hs.push_back(rep.h);
    ratios.push_back(rep.ratio);
  }
  study.fitted_exponent = loglog_slope(hs, ratios);
  return study;
}

double eoc(double e_coarse, double e_fine) {
  if (e_coarse < 1e-12 || e_fine < 1e-12) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(e_coarse / e_fine);
}

std::vector<double> eoc_column(const std::vector<double>& errors) {
  std::vector<double> out(errors.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i < errors.size(); ++i) out[i] = eoc(errors[i - 1], errors[i]);
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace slfem
