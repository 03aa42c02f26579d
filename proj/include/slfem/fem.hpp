#pragma once

#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "slfem/material.hpp"
#include "slfem/mesh.hpp"
#include "slfem/tensor.hpp"

namespace slfem {

using VectorFn = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;
using TensorFn = std::function<SymTensor2(const Eigen::Vector2d&)>;
using SparseMat = Eigen::SparseMatrix<double>;

// --- quadrature -----------------------------------------------------------

struct QPoint {
  double xi = 0, eta = 0, w = 0;
};

// Tensor-product Gauss rule on [-1,1]^2, n points per direction (n <= 6).
const std::vector<QPoint>& quad_rule(int n_per_dir);
// Rules on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
const std::vector<QPoint>& tri_rule(int degree);  // degree in {2, 5}

// Shape values and physical gradients of the (bi)linear displacement basis at
// one reference point of one cell.
struct ElemPoint {
  Eigen::Vector2d x;
  double jxw = 0;
  std::array<double, 4> shape{};
  std::array<Eigen::Vector2d, 4> grad{};
};

ElemPoint elem_point(const Mesh& m, int cell, double xi, double eta, double w);

// --- spaces and fields ------------------------------------------------------

enum class StressSpace { P0, Q1Disc };

// Mixed pair: cellwise stress dofs (components ordered xx, yy, xy) and a
// continuous (bi)linear displacement with Dirichlet-constrained nodes removed
// from the free numbering.
struct FunctionSpaces {
  const Mesh* mesh = nullptr;
  StressSpace stress = StressSpace::P0;
  std::vector<char> node_constrained;
  std::vector<int> free_index;  // 2*nnodes -> free dof index or -1
  int n_free = 0;
  int stress_nodes_per_cell = 1;
  int n_stress_dof = 0;
  std::vector<double> cell_areas;

  int n_nodes() const { return static_cast<int>(mesh->nodes.size()); }
  int n_cells() const { return static_cast<int>(mesh->cells.size()); }
  int sdof(int cell, int snode, int comp) const {
    return (cell * stress_nodes_per_cell + snode) * 3 + comp;
  }
  int udof(int node, int comp) const { return 2 * node + comp; }
};

FunctionSpaces make_spaces(const Mesh& mesh, StressSpace sp,
                           const std::vector<BoundaryTag>& dirichlet_tags);

// Stress dofs use the orthonormal component basis (xx, yy, sqrt(2)*xy), so
// coefficient dot products are tensor contractions and the mass matrix
// carries the plain cell measure per component.
inline constexpr double kSqrt2 = 1.4142135623730951;

inline SymTensor2 coeff_to_tensor(const Eigen::VectorXd& v, int base) {
  return SymTensor2({v[base], v[base + 1], v[base + 2] / kSqrt2});
}

inline void tensor_to_coeff(const SymTensor2& t, Eigen::VectorXd& v, int base) {
  v[base] = t[0];
  v[base + 1] = t[1];
  v[base + 2] = kSqrt2 * t[2];
}

struct StressField {
  Eigen::VectorXd coeffs;

  SymTensor2 at(const FunctionSpaces& sp, int cell, int snode = 0) const {
    return coeff_to_tensor(coeffs, sp.sdof(cell, snode, 0));
  }
  void set(const FunctionSpaces& sp, int cell, int snode, const SymTensor2& t) {
    tensor_to_coeff(t, coeffs, sp.sdof(cell, snode, 0));
  }
};

StressField zero_stress(const FunctionSpaces& sp);

// Full per-node values; constrained entries carry the Dirichlet datum.
struct DisplacementField {
  Eigen::VectorXd values;
};

DisplacementField make_displacement(const FunctionSpaces& sp, const VectorFn& g = nullptr);
Eigen::VectorXd free_part(const FunctionSpaces& sp, const DisplacementField& u);
void set_free_part(const FunctionSpaces& sp, DisplacementField& u, const Eigen::VectorXd& uf);
Eigen::VectorXd restrict_to_free(const FunctionSpaces& sp, const Eigen::VectorXd& all);

// --- assembly ---------------------------------------------------------------

// Coupling b(S, v) = \int S : eps(v) and the stress mass (Gram) matrix in the
// doubled off-diagonal convention. E_cell keeps per-cell dense blocks
// (P0 stress only) for cheap reassembly of weighted Schur complements.
struct Assembly {
  const FunctionSpaces* spaces = nullptr;
  SparseMat E_full;      // n_sdof x 2*nnodes
  SparseMat E_free;      // n_sdof x n_free
  SparseMat M;           // n_sdof x n_sdof, block diagonal
  SparseMat Minv;
  Eigen::VectorXd M_diag, Minv_diag;                // populated for P0
  std::vector<Eigen::Matrix<double, 3, 8>> E_cell;  // P0 only
};

Assembly assemble_coupling(const FunctionSpaces& sp);

Eigen::VectorXd assemble_load(const FunctionSpaces& sp, const VectorFn& body_force,
                              const std::map<BoundaryTag, VectorFn>& tractions = {});

// \int G : S for every stress basis function S.
Eigen::VectorXd assemble_stress_source(const FunctionSpaces& sp, const TensorFn& G);

// \int X : eps(phi) for every displacement basis function phi.
Eigen::VectorXd assemble_strain_dual(const FunctionSpaces& sp, const TensorFn& X);

// \int eps(u) : eps(v) over all displacement dofs.
SparseMat assemble_strain_stiffness(const FunctionSpaces& sp);

// L2 projection onto the stress space: cell averages for P0, per-cell mass
// solves for Q1Disc. Exact for fields already in the space.
StressField project_P0(const FunctionSpaces& sp, const TensorFn& f);

// Stress-space coefficients of the projected strain of u.
Eigen::VectorXd strain_projection(const Assembly& a, const Eigen::VectorXd& u_values);

// --- evaluation and norms ----------------------------------------------------

Eigen::Matrix2d grad_u_at(const FunctionSpaces& sp, const DisplacementField& u, int cell,
                          double xi, double eta);
SymTensor2 stress_at(const FunctionSpaces& sp, const StressField& T, int cell, double xi,
                     double eta);

double stress_lp_norm(const FunctionSpaces& sp, const StressField& T, double p);
double grad_l2_norm(const FunctionSpaces& sp, const DisplacementField& u);

struct ErrorNorms {
  double e_u = 0;          // || grad(u_ex - u_h) ||_L2
  double u_l2 = 0;         // || u_ex - u_h ||_L2
  double e_T = 0;          // || T_ex - T_h ||_Lp, pointwise Frobenius norm
  double e_T_comp = 0;     // same but with the (xx,yy,xy) component-vector norm
  double e_T_comp_l1 = 0;  // pointwise sum of component moduli, then Lp
  double e_T_proj = 0;     // || Pi_h T_ex - T_h ||_Lp, Frobenius
  double linf_grad_u = 0;  // max |grad u_h| over quadrature points and corners
  double linf_T = 0;       // max |T_h|
};

ErrorNorms error_norms(const FunctionSpaces& sp, const DisplacementField& u_h,
                       const StressField& T_h, const VectorFn& u_exact,
                       const std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>& grad_u_exact,
                       const TensorFn& T_exact, double p);

// Modular error functional: \int Phi_n(|diff|) dx with
// Phi_n(s) = s^2 / (1+s)^(1-1/n); equals the squared L2 norm when n = 1.
double phi_n(double s, double n);
double modular_phi_n(const FunctionSpaces& sp, const StressField& diff, double n);

}  // namespace slfem
