#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slfem/diagnostics.hpp"
#include "slfem/solver.hpp"

namespace slfem {

// Closed-form data for the two benchmark solutions. Derivatives are
// hand-derived and cross-checked against finite differences at start-up.
namespace manufactured {

// u = (y(1-y), 0), T = diag(e^x, cos y) on the unit square.
Eigen::Vector2d u_exact(const Eigen::Vector2d& p);
Eigen::Matrix2d grad_u_exact(const Eigen::Vector2d& p);
SymTensor2 T_exact(const Eigen::Vector2d& p);
Eigen::Vector2d body_force(const Eigen::Vector2d& p);  // -div T = (-e^x, sin y)

// Constitutive source G making (u, T) solve the modified system; with_reg
// includes the regularizer (validation study), without it the data solve the
// unregularized system (n-sweep study).
SymTensor2 stress_source(const Eigen::Vector2d& p, const MaterialLaw& law,
                         const RegularizationParams& reg, bool with_reg);

// Linear inf-sup study: u = (x e^y, sin x), T = eps(u).
Eigen::Vector2d u_linear(const Eigen::Vector2d& p);
Eigen::Matrix2d grad_u_linear(const Eigen::Vector2d& p);
SymTensor2 T_linear(const Eigen::Vector2d& p);
Eigen::Vector2d body_force_linear(const Eigen::Vector2d& p);

// Cross-check of the hand-derived f and G against central finite differences
// of the exact fields at `samples` random points (step 1e-6, tol 1e-6).
// Throws on mismatch. Checks both regularizer forms.
void verify_derivatives(const MaterialLaw& law, const RegularizationParams& reg,
                        unsigned seed = 20240901, int samples = 100);

}  // namespace manufactured

struct ExperimentConfig {
  std::string experiment;  // validate | n-sweep | crack | infsup | checkerboard
  double n = 1.0;
  double t = 1.0;
  double tau = 0.01;
  double tol = 1e-5;
  std::vector<int> levels = {2, 3, 4, 5, 6, 7};       // mesh is 2^level squares per side
  std::vector<double> n_list = {1.0, 500.0, 1000.0};  // n-sweep
  std::vector<double> f_list = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  std::vector<int> N_list = {7, 15, 31, 63};          // checkerboard partitions
  std::vector<double> cb_n_list = {1.0, 2.0};
  int crack_level = 5;   // 16 * 4^5 = 16384 cells
  int sweep_level = 7;   // h = 2^-7 for the n-sweep
  std::string stress_space = "Q0";  // P0 (simplicial) | Q0 | Q1disc
  std::string reg_form = "auto";    // auto | split (trace/deviatoric at every t)
  std::string law = "builtin";
  std::string out_dir;
  int threads = 1;
  bool write_vtk_fields = true;
};

// Applies [section] keys (and keys outside any section) onto the given
// defaults.
ExperimentConfig parse_config_file(const std::string& path, const std::string& section,
                                   ExperimentConfig defaults = {});

// Manufactured problem on a caller-owned mesh; reg_in_G selects whether the
// source G compensates the regularizer.
Problem make_validation_problem(const Mesh& mesh, StressSpace space,
                                const RegularizationParams& reg, bool reg_in_G);
Problem make_crack_problem(const Mesh& mesh, const RegularizationParams& reg, double f);

struct ValidateRow {
  double h = 0;
  double e_u = 0;      // from the decoupled iteration
  double e_T = 0;      // from the stable-pair solve, component-vector norm
  double modular = 0;  // rho_{Phi_n}(T_h - Pi_h T) of the decoupled stress
  int iterations = 0;
  double quotient = 0;
  bool converged = false;
};
struct ValidateResult {
  std::vector<ValidateRow> rows;
  std::vector<double> eoc_u, eoc_T;
};
ValidateResult run_validate(const ExperimentConfig& cfg);

struct NSweepRow {
  std::string t_mode;  // "t=1" or "t=n"
  double n = 1;
  double e_u = 0, e_T = 0;  // e_T in L2 for t=1, L1 otherwise
  int iterations = 0;
  double quotient = 0;
  bool converged = false;
};
std::vector<NSweepRow> run_n_sweep(const ExperimentConfig& cfg);

struct CrackRow {
  double f = 0;
  double linf_grad_u = 0, linf_T = 0;
  int iterations = 0;
  double quotient = 0;
  bool converged = false;
};
std::vector<CrackRow> run_crack(const ExperimentConfig& cfg);

struct InfsupRow {
  double h = 0;
  double e_u = 0;      // || grad(u - u_h) ||_L2
  double u_l2 = 0;     // || u - u_h ||_L2
  double e_T_l1 = 0;   // || T - T_h ||_L1
  double swap_grad_diff = 0;  // || grad(u_h^{Q0} - u_h^{Q1disc}) ||_L2
};
struct InfsupResult {
  std::vector<InfsupRow> rows;
  std::vector<double> eoc_u, eoc_T;
};
InfsupResult run_infsup(const ExperimentConfig& cfg);

struct CheckerboardResult {
  std::vector<InfSupReport> reports;         // all (n, N) combinations
  std::vector<double> fitted_exponents;      // one per n in cb_n_list
};
CheckerboardResult run_checkerboard(const ExperimentConfig& cfg);

// CSV emission (6 significant digits, comma separated, header row).
void write_validate_csv(const ValidateResult& r, std::ostream& os);
void write_n_sweep_csv(const std::vector<NSweepRow>& rows, std::ostream& os);
void write_crack_csv(const std::vector<CrackRow>& rows, std::ostream& os);
void write_infsup_csv(const InfsupResult& r, std::ostream& os);
void write_checkerboard_csv(const CheckerboardResult& r, std::ostream& os);

// Runs the experiment named in cfg, writes CSV (and VTK) into cfg.out_dir.
// Returns true when every row converged.
bool run_experiment(const ExperimentConfig& cfg);

}  // namespace slfem
