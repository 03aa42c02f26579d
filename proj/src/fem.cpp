#include "slfem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slfem {

namespace {

struct Gauss1D {
  double x, w;
};

std::vector<Gauss1D> gauss_1d(int n) {
  switch (n) {
    case 1: return {{0.0, 2.0}};
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return {{-a, 1.0}, {a, 1.0}};
    }
    case 3: {
      const double a = std::sqrt(3.0 / 5.0);
      return {{-a, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {a, 5.0 / 9.0}};
    }
    case 4: {
      const double x1 = 0.3399810435848563, w1 = 0.6521451548625461;
      const double x2 = 0.8611363115940526, w2 = 0.3478548451374538;
      return {{-x2, w2}, {-x1, w1}, {x1, w1}, {x2, w2}};
    }
    case 5: {
      const double x1 = 0.5384693101056831, w1 = 0.4786286704993665;
      const double x2 = 0.9061798459386640, w2 = 0.2369268850561891;
      return {{-x2, w2}, {-x1, w1}, {0.0, 0.5688888888888889}, {x1, w1}, {x2, w2}};
    }
    case 6: {
      const double x1 = 0.2386191860831969, w1 = 0.4679139345726910;
      const double x2 = 0.6612093864662645, w2 = 0.3607615730481386;
      const double x3 = 0.9324695142031521, w3 = 0.1713244923791704;
      return {{-x3, w3}, {-x2, w2}, {-x1, w1}, {x1, w1}, {x2, w2}, {x3, w3}};
    }
    default: throw std::invalid_argument("gauss_1d: order not tabulated");
  }
}

std::vector<QPoint> make_tensor_rule(int n) {
  const auto g = gauss_1d(n);
  std::vector<QPoint> pts;
  pts.reserve(g.size() * g.size());
  for (const auto& gy : g)
    for (const auto& gx : g) pts.push_back({gx.x, gy.x, gx.w * gy.w});
  return pts;
}

}  // namespace

const std::vector<QPoint>& quad_rule(int n_per_dir) {
  static const std::vector<std::vector<QPoint>> rules = [] {
    std::vector<std::vector<QPoint>> r;
    for (int n = 1; n <= 6; ++n) r.push_back(make_tensor_rule(n));
    return r;
  }();
  if (n_per_dir < 1 || n_per_dir > 6) throw std::invalid_argument("quad_rule: order 1..6");
  return rules[n_per_dir - 1];
}

const std::vector<QPoint>& tri_rule(int degree) {
  static const std::vector<QPoint> deg2 = {
      {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0},
      {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
      {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}};
  static const std::vector<QPoint> deg5 = [] {
    std::vector<QPoint> pts;
    pts.push_back({1.0 / 3.0, 1.0 / 3.0, 0.225 * 0.5});
    const double b = 0.470142064105115, wb = 0.132394152788506 * 0.5;
    pts.push_back({b, b, wb});
    pts.push_back({1.0 - 2.0 * b, b, wb});
    pts.push_back({b, 1.0 - 2.0 * b, wb});
    const double d = 0.101286507323456, wd = 0.125939180544827 * 0.5;
    pts.push_back({d, d, wd});
    pts.push_back({1.0 - 2.0 * d, d, wd});
    pts.push_back({d, 1.0 - 2.0 * d, wd});
    return pts;
  }();
  if (degree <= 2) return deg2;
  return deg5;
}

ElemPoint elem_point(const Mesh& m, int cell, double xi, double eta, double w) {
  ElemPoint ep;
  const auto& c = m.cells[cell];
  if (m.kind == Mesh::CellKind::Quad) {
    const double N[4] = {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
                         0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta)};
    const double dNxi[4] = {-0.25 * (1 - eta), 0.25 * (1 - eta), 0.25 * (1 + eta),
                            -0.25 * (1 + eta)};
    const double dNeta[4] = {-0.25 * (1 - xi), -0.25 * (1 + xi), 0.25 * (1 + xi),
                             0.25 * (1 - xi)};
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    ep.x.setZero();
    for (int a = 0; a < 4; ++a) {
      const Eigen::Vector2d& p = m.nodes[c[a]];
      ep.x += N[a] * p;
      J(0, 0) += p.x() * dNxi[a];
      J(0, 1) += p.x() * dNeta[a];
      J(1, 0) += p.y() * dNxi[a];
      J(1, 1) += p.y() * dNeta[a];
    }
    const double det = J.determinant();
    const Eigen::Matrix2d JinvT = J.inverse().transpose();
    for (int a = 0; a < 4; ++a) {
      ep.shape[a] = N[a];
      ep.grad[a] = JinvT * Eigen::Vector2d(dNxi[a], dNeta[a]);
    }
    ep.jxw = det * w;
  } else {
    const double N[3] = {1.0 - xi - eta, xi, eta};
    const Eigen::Vector2d dN[3] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
    Eigen::Matrix2d J;
    J.col(0) = m.nodes[c[1]] - m.nodes[c[0]];
    J.col(1) = m.nodes[c[2]] - m.nodes[c[0]];
    const double det = J.determinant();
    const Eigen::Matrix2d JinvT = J.inverse().transpose();
    ep.x = m.nodes[c[0]] + xi * J.col(0) + eta * J.col(1);
    for (int a = 0; a < 3; ++a) {
      ep.shape[a] = N[a];
      ep.grad[a] = JinvT * dN[a];
    }
    ep.jxw = det * w;
  }
  return ep;
}

FunctionSpaces make_spaces(const Mesh& mesh, StressSpace sp,
                           const std::vector<BoundaryTag>& dirichlet_tags) {
  FunctionSpaces fs;
  fs.mesh = &mesh;
  fs.stress = sp;
  if (sp == StressSpace::Q1Disc && mesh.kind != Mesh::CellKind::Quad)
    throw std::invalid_argument("make_spaces: Q1Disc stress requires a quad mesh");
  fs.stress_nodes_per_cell = sp == StressSpace::P0 ? 1 : 4;
  fs.n_stress_dof = fs.n_cells() * fs.stress_nodes_per_cell * 3;
  fs.node_constrained.assign(mesh.nodes.size(), 0);
  for (const auto& e : mesh.boundary_edges) {
    if (std::find(dirichlet_tags.begin(), dirichlet_tags.end(), e.tag) != dirichlet_tags.end()) {
      fs.node_constrained[e.a] = 1;
      fs.node_constrained[e.b] = 1;
    }
  }
  fs.free_index.assign(2 * mesh.nodes.size(), -1);
  for (int node = 0; node < fs.n_nodes(); ++node) {
    if (fs.node_constrained[node]) continue;
    fs.free_index[2 * node] = fs.n_free++;
    fs.free_index[2 * node + 1] = fs.n_free++;
  }
  fs.cell_areas.resize(mesh.cells.size());
  for (int k = 0; k < fs.n_cells(); ++k) fs.cell_areas[k] = cell_area(mesh, k);
  return fs;
}

StressField zero_stress(const FunctionSpaces& sp) {
  StressField T;
  T.coeffs = Eigen::VectorXd::Zero(sp.n_stress_dof);
  return T;
}

DisplacementField make_displacement(const FunctionSpaces& sp, const VectorFn& g) {
  DisplacementField u;
  u.values = Eigen::VectorXd::Zero(2 * sp.n_nodes());
  if (g) {
    for (int node = 0; node < sp.n_nodes(); ++node) {
      if (!sp.node_constrained[node]) continue;
      const Eigen::Vector2d v = g(sp.mesh->nodes[node]);
      u.values[2 * node] = v.x();
      u.values[2 * node + 1] = v.y();
    }
  }
  return u;
}

Eigen::VectorXd free_part(const FunctionSpaces& sp, const DisplacementField& u) {
  Eigen::VectorXd uf(sp.n_free);
  for (int d = 0; d < 2 * sp.n_nodes(); ++d)
    if (sp.free_index[d] >= 0) uf[sp.free_index[d]] = u.values[d];
  return uf;
}

void set_free_part(const FunctionSpaces& sp, DisplacementField& u, const Eigen::VectorXd& uf) {
  for (int d = 0; d < 2 * sp.n_nodes(); ++d)
    if (sp.free_index[d] >= 0) u.values[d] = uf[sp.free_index[d]];
}

Eigen::VectorXd restrict_to_free(const FunctionSpaces& sp, const Eigen::VectorXd& all) {
  Eigen::VectorXd out(sp.n_free);
  for (int d = 0; d < 2 * sp.n_nodes(); ++d)
    if (sp.free_index[d] >= 0) out[sp.free_index[d]] = all[d];
  return out;
}

namespace {

const std::vector<QPoint>& assembly_rule(const Mesh& m) {
  return m.kind == Mesh::CellKind::Quad ? quad_rule(3) : tri_rule(2);
}

const std::vector<QPoint>& norm_rule(const Mesh& m) {
  return m.kind == Mesh::CellKind::Quad ? quad_rule(5) : tri_rule(5);
}

}  // namespace

Assembly assemble_coupling(const FunctionSpaces& sp) {
  Assembly a;
  a.spaces = &sp;
  const Mesh& m = *sp.mesh;
  const int npc = m.nodes_per_cell();
  const int snpc = sp.stress_nodes_per_cell;
  const auto& rule = assembly_rule(m);

  std::vector<Eigen::Triplet<double>> te, tm, tminv;
  te.reserve(m.cells.size() * snpc * 3 * 2 * npc);
  if (sp.stress == StressSpace::P0) a.E_cell.assign(m.cells.size(), Eigen::Matrix<double, 3, 8>::Zero());
  a.M_diag = Eigen::VectorXd::Zero(sp.stress == StressSpace::P0 ? sp.n_stress_dof : 0);

  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    const auto& conn = m.cells[cell];
    if (sp.stress == StressSpace::P0) {
      Eigen::Matrix<double, 3, 8> Ec = Eigen::Matrix<double, 3, 8>::Zero();
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
        for (int anode = 0; anode < npc; ++anode) {
          const double gx = ep.grad[anode].x();
          const double gy = ep.grad[anode].y();
          Ec(0, 2 * anode) += ep.jxw * gx;
          Ec(1, 2 * anode + 1) += ep.jxw * gy;
          Ec(2, 2 * anode) += ep.jxw * gy / kSqrt2;
          Ec(2, 2 * anode + 1) += ep.jxw * gx / kSqrt2;
        }
      }
      a.E_cell[cell] = Ec;
      for (int c = 0; c < 3; ++c)
        for (int anode = 0; anode < npc; ++anode)
          for (int d = 0; d < 2; ++d) {
            const double v = Ec(c, 2 * anode + d);
            if (v != 0.0) te.emplace_back(sp.sdof(cell, 0, c), 2 * conn[anode] + d, v);
          }
      const double area = sp.cell_areas[cell];
      for (int c = 0; c < 3; ++c) {
        const int row = sp.sdof(cell, 0, c);
        a.M_diag[row] = area;
        tm.emplace_back(row, row, area);
        tminv.emplace_back(row, row, 1.0 / area);
      }
    } else {
      // discontinuous bilinear stress: 4 nodal tensors per cell
      Eigen::Matrix4d mass = Eigen::Matrix4d::Zero();
      Eigen::Matrix<double, 4, 8> ecomp[3];
      for (auto& e : ecomp) e.setZero();
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
        for (int b = 0; b < 4; ++b)
          for (int b2 = 0; b2 < 4; ++b2) mass(b, b2) += ep.jxw * ep.shape[b] * ep.shape[b2];
        for (int b = 0; b < 4; ++b)
          for (int anode = 0; anode < npc; ++anode) {
            const double gx = ep.grad[anode].x();
            const double gy = ep.grad[anode].y();
            ecomp[0](b, 2 * anode) += ep.jxw * ep.shape[b] * gx;
            ecomp[1](b, 2 * anode + 1) += ep.jxw * ep.shape[b] * gy;
            ecomp[2](b, 2 * anode) += ep.jxw * ep.shape[b] * gy / kSqrt2;
            ecomp[2](b, 2 * anode + 1) += ep.jxw * ep.shape[b] * gx / kSqrt2;
          }
      }
      const Eigen::Matrix4d mass_inv = mass.inverse();
      for (int c = 0; c < 3; ++c)
        for (int b = 0; b < 4; ++b) {
          const int row = sp.sdof(cell, b, c);
          for (int anode = 0; anode < npc; ++anode)
            for (int d = 0; d < 2; ++d) {
              const double v = ecomp[c](b, 2 * anode + d);
              if (v != 0.0) te.emplace_back(row, 2 * conn[anode] + d, v);
            }
          for (int b2 = 0; b2 < 4; ++b2) {
            tm.emplace_back(row, sp.sdof(cell, b2, c), mass(b, b2));
            tminv.emplace_back(row, sp.sdof(cell, b2, c), mass_inv(b, b2));
          }
        }
    }
  }

  const int nud = 2 * sp.n_nodes();
  a.E_full.resize(sp.n_stress_dof, nud);
  a.E_full.setFromTriplets(te.begin(), te.end());
  a.M.resize(sp.n_stress_dof, sp.n_stress_dof);
  a.M.setFromTriplets(tm.begin(), tm.end());
  a.Minv.resize(sp.n_stress_dof, sp.n_stress_dof);
  a.Minv.setFromTriplets(tminv.begin(), tminv.end());
  if (sp.stress == StressSpace::P0) a.Minv_diag = a.M_diag.cwiseInverse();

  std::vector<Eigen::Triplet<double>> tp;
  for (int d = 0; d < nud; ++d)
    if (sp.free_index[d] >= 0) tp.emplace_back(d, sp.free_index[d], 1.0);
  SparseMat P(nud, sp.n_free);
  P.setFromTriplets(tp.begin(), tp.end());
  a.E_free = a.E_full * P;
  return a;
}

Eigen::VectorXd assemble_load(const FunctionSpaces& sp, const VectorFn& body_force,
                              const std::map<BoundaryTag, VectorFn>& tractions) {
  const Mesh& m = *sp.mesh;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(2 * sp.n_nodes());
  if (body_force) {
    const auto& rule = assembly_rule(m);
    const int npc = m.nodes_per_cell();
    for (int cell = 0; cell < sp.n_cells(); ++cell) {
      const auto& conn = m.cells[cell];
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
        const Eigen::Vector2d f = body_force(ep.x);
        for (int a = 0; a < npc; ++a) {
          load[2 * conn[a]] += ep.jxw * ep.shape[a] * f.x();
          load[2 * conn[a] + 1] += ep.jxw * ep.shape[a] * f.y();
        }
      }
    }
  }
  if (!tractions.empty()) {
    const auto g = gauss_1d(3);
    for (const auto& e : m.boundary_edges) {
      const auto it = tractions.find(e.tag);
      if (it == tractions.end() || !it->second) continue;
      const Eigen::Vector2d p = m.nodes[e.a], q = m.nodes[e.b];
      const double half_len = 0.5 * (q - p).norm();
      for (const auto& gp : g) {
        const double sa = 0.5 * (1.0 - gp.x), sb = 0.5 * (1.0 + gp.x);
        const Eigen::Vector2d x = sa * p + sb * q;
        const Eigen::Vector2d l = it->second(x);
        const double w = gp.w * half_len;
        load[2 * e.a] += w * sa * l.x();
        load[2 * e.a + 1] += w * sa * l.y();
        load[2 * e.b] += w * sb * l.x();
        load[2 * e.b + 1] += w * sb * l.y();
      }
    }
  }
  return load;
}

Eigen::VectorXd assemble_stress_source(const FunctionSpaces& sp, const TensorFn& G) {
  const Mesh& m = *sp.mesh;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sp.n_stress_dof);
  if (!G) return out;
  const auto& rule = assembly_rule(m);
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    for (const auto& q : rule) {
      const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
      const SymTensor2 g = G(ep.x);
      const double comp[3] = {g[0], g[1], kSqrt2 * g[2]};
      if (sp.stress == StressSpace::P0) {
        for (int c = 0; c < 3; ++c) out[sp.sdof(cell, 0, c)] += ep.jxw * comp[c];
      } else {
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 3; ++c)
            out[sp.sdof(cell, b, c)] += ep.jxw * ep.shape[b] * comp[c];
      }
    }
  }
  return out;
}

Eigen::VectorXd assemble_strain_dual(const FunctionSpaces& sp, const TensorFn& X) {
  const Mesh& m = *sp.mesh;
  const int npc = m.nodes_per_cell();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * sp.n_nodes());
  const auto& rule = assembly_rule(m);
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    const auto& conn = m.cells[cell];
    for (const auto& q : rule) {
      const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
      const SymTensor2 x = X(ep.x);
      for (int a = 0; a < npc; ++a) {
        const double gx = ep.grad[a].x(), gy = ep.grad[a].y();
        out[2 * conn[a]] += ep.jxw * (x[0] * gx + x[2] * gy);
        out[2 * conn[a] + 1] += ep.jxw * (x[1] * gy + x[2] * gx);
      }
    }
  }
  return out;
}

SparseMat assemble_strain_stiffness(const FunctionSpaces& sp) {
  const Mesh& m = *sp.mesh;
  const int npc = m.nodes_per_cell();
  std::vector<Eigen::Triplet<double>> tr;
  tr.reserve(m.cells.size() * 4 * npc * npc);
  const auto& rule = assembly_rule(m);
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    const auto& conn = m.cells[cell];
    for (const auto& q : rule) {
      const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
      for (int a = 0; a < npc; ++a)
        for (int b = 0; b < npc; ++b) {
          const double gxa = ep.grad[a].x(), gya = ep.grad[a].y();
          const double gxb = ep.grad[b].x(), gyb = ep.grad[b].y();
          tr.emplace_back(2 * conn[a], 2 * conn[b], ep.jxw * (gxa * gxb + 0.5 * gya * gyb));
          tr.emplace_back(2 * conn[a] + 1, 2 * conn[b] + 1,
                          ep.jxw * (gya * gyb + 0.5 * gxa * gxb));
          tr.emplace_back(2 * conn[a], 2 * conn[b] + 1, ep.jxw * 0.5 * gya * gxb);
          tr.emplace_back(2 * conn[a] + 1, 2 * conn[b], ep.jxw * 0.5 * gxa * gyb);
        }
    }
  }
  SparseMat K(2 * sp.n_nodes(), 2 * sp.n_nodes());
  K.setFromTriplets(tr.begin(), tr.end());
  return K;
}

StressField project_P0(const FunctionSpaces& sp, const TensorFn& f) {
  const Mesh& m = *sp.mesh;
  StressField out = zero_stress(sp);
  const auto& rule = norm_rule(m);
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    if (sp.stress == StressSpace::P0) {
      SymTensor2 acc;
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
        acc += f(ep.x) * ep.jxw;
      }
      out.set(sp, cell, 0, acc / sp.cell_areas[cell]);
    } else {
      Eigen::Matrix4d mass = Eigen::Matrix4d::Zero();
      Eigen::Matrix<double, 4, 3> rhs = Eigen::Matrix<double, 4, 3>::Zero();
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
        const SymTensor2 v = f(ep.x);
        const double comp[3] = {v[0], v[1], v[2]};
        for (int b = 0; b < 4; ++b) {
          for (int b2 = 0; b2 < 4; ++b2) mass(b, b2) += ep.jxw * ep.shape[b] * ep.shape[b2];
          for (int c = 0; c < 3; ++c) rhs(b, c) += ep.jxw * ep.shape[b] * comp[c];
        }
      }
      const Eigen::Matrix<double, 4, 3> coef = mass.ldlt().solve(rhs);
      for (int b = 0; b < 4; ++b)
        out.set(sp, cell, b, SymTensor2({coef(b, 0), coef(b, 1), coef(b, 2)}));
    }
  }
  return out;
}

Eigen::VectorXd strain_projection(const Assembly& a, const Eigen::VectorXd& u_values) {
  return a.Minv * (a.E_full * u_values);
}

Eigen::Matrix2d grad_u_at(const FunctionSpaces& sp, const DisplacementField& u, int cell,
                          double xi, double eta) {
  const Mesh& m = *sp.mesh;
  const ElemPoint ep = elem_point(m, cell, xi, eta, 1.0);
  const auto& conn = m.cells[cell];
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (int a = 0; a < m.nodes_per_cell(); ++a) {
    const Eigen::Vector2d ua(u.values[2 * conn[a]], u.values[2 * conn[a] + 1]);
    g += ua * ep.grad[a].transpose();
  }
  return g;
}

SymTensor2 stress_at(const FunctionSpaces& sp, const StressField& T, int cell, double xi,
                     double eta) {
  if (sp.stress == StressSpace::P0) return T.at(sp, cell, 0);
  const double N[4] = {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta),
                       0.25 * (1 + xi) * (1 + eta), 0.25 * (1 - xi) * (1 + eta)};
  SymTensor2 acc;
  for (int b = 0; b < 4; ++b) acc += T.at(sp, cell, b) * N[b];
  return acc;
}

double stress_lp_norm(const FunctionSpaces& sp, const StressField& T, double p) {
  double acc = 0.0;
  if (sp.stress == StressSpace::P0) {
    for (int cell = 0; cell < sp.n_cells(); ++cell)
      acc += sp.cell_areas[cell] * std::pow(frobenius_norm(T.at(sp, cell, 0)), p);
  } else {
    const auto& rule = quad_rule(4);
    for (int cell = 0; cell < sp.n_cells(); ++cell)
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(*sp.mesh, cell, q.xi, q.eta, q.w);
        acc += ep.jxw * std::pow(frobenius_norm(stress_at(sp, T, cell, q.xi, q.eta)), p);
      }
  }
  return std::pow(acc, 1.0 / p);
}

double grad_l2_norm(const FunctionSpaces& sp, const DisplacementField& u) {
  const auto& rule = assembly_rule(*sp.mesh);
  double acc = 0.0;
  for (int cell = 0; cell < sp.n_cells(); ++cell)
    for (const auto& q : rule) {
      const ElemPoint ep = elem_point(*sp.mesh, cell, q.xi, q.eta, q.w);
      acc += ep.jxw * grad_u_at(sp, u, cell, q.xi, q.eta).squaredNorm();
    }
  return std::sqrt(acc);
}

ErrorNorms error_norms(const FunctionSpaces& sp, const DisplacementField& u_h,
                       const StressField& T_h, const VectorFn& u_exact,
                       const std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>& grad_u_exact,
                       const TensorFn& T_exact, double p) {
  const Mesh& m = *sp.mesh;
  ErrorNorms en;
  const StressField PT = T_exact ? project_P0(sp, T_exact) : zero_stress(sp);
  const auto& rule = norm_rule(m);

  double eu2 = 0, ul2 = 0, eT = 0, eTc = 0, eTc1 = 0, eTp = 0;
  std::vector<std::pair<double, double>> corners;
  if (m.kind == Mesh::CellKind::Quad)
    corners = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  else
    corners = {{0, 0}, {1, 0}, {0, 1}};

  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    for (const auto& q : rule) {
      const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
      const Eigen::Matrix2d gh = grad_u_at(sp, u_h, cell, q.xi, q.eta);
      en.linf_grad_u = std::max(en.linf_grad_u, gh.norm());
      if (grad_u_exact) eu2 += ep.jxw * (grad_u_exact(ep.x) - gh).squaredNorm();
      if (u_exact) {
        const auto& conn = m.cells[cell];
        Eigen::Vector2d uh = Eigen::Vector2d::Zero();
        for (int a = 0; a < m.nodes_per_cell(); ++a)
          uh += ep.shape[a] * Eigen::Vector2d(u_h.values[2 * conn[a]], u_h.values[2 * conn[a] + 1]);
        ul2 += ep.jxw * (u_exact(ep.x) - uh).squaredNorm();
      }
      const SymTensor2 Th = stress_at(sp, T_h, cell, q.xi, q.eta);
      en.linf_T = std::max(en.linf_T, frobenius_norm(Th));
      if (T_exact) {
        const SymTensor2 diff = T_exact(ep.x) - Th;
        eT += ep.jxw * std::pow(frobenius_norm(diff), p);
        const double comp2 =
            std::sqrt(diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2]);
        eTc += ep.jxw * std::pow(comp2, p);
        eTc1 += ep.jxw *
                std::pow(std::abs(diff[0]) + std::abs(diff[1]) + std::abs(diff[2]), p);
        if (sp.stress != StressSpace::P0)
          eTp += ep.jxw * std::pow(frobenius_norm(stress_at(sp, PT, cell, q.xi, q.eta) - Th), p);
      }
    }
    if (sp.stress == StressSpace::P0 && T_exact)
      eTp += sp.cell_areas[cell] *
             std::pow(frobenius_norm(PT.at(sp, cell, 0) - T_h.at(sp, cell, 0)), p);
    for (const auto& [cx, cy] : corners) {
      en.linf_grad_u = std::max(en.linf_grad_u, grad_u_at(sp, u_h, cell, cx, cy).norm());
      en.linf_T = std::max(en.linf_T, frobenius_norm(stress_at(sp, T_h, cell, cx, cy)));
    }
  }
  en.e_u = std::sqrt(eu2);
  en.u_l2 = std::sqrt(ul2);
  en.e_T = std::pow(eT, 1.0 / p);
  en.e_T_comp = std::pow(eTc, 1.0 / p);
  en.e_T_comp_l1 = std::pow(eTc1, 1.0 / p);
  en.e_T_proj = std::pow(eTp, 1.0 / p);
  return en;
}

double phi_n(double s, double n) { return s * s / std::pow(1.0 + std::abs(s), 1.0 - 1.0 / n); }

double modular_phi_n(const FunctionSpaces& sp, const StressField& diff, double n) {
  double acc = 0.0;
  if (sp.stress == StressSpace::P0) {
    for (int cell = 0; cell < sp.n_cells(); ++cell)
      acc += sp.cell_areas[cell] * phi_n(frobenius_norm(diff.at(sp, cell, 0)), n);
  } else {
    const auto& rule = quad_rule(4);
    for (int cell = 0; cell < sp.n_cells(); ++cell)
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(*sp.mesh, cell, q.xi, q.eta, q.w);
        acc += ep.jxw * phi_n(frobenius_norm(stress_at(sp, diff, cell, q.xi, q.eta)), n);
      }
  }
  return acc;
}

}  // namespace slfem
