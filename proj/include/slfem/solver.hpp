#pragma once

#include <functional>
#include <map>
#include <memory>

#include <Eigen/SparseCholesky>

#include "slfem/fem.hpp"

namespace slfem {

// Complete description of one discrete boundary-value problem.
struct Problem {
  FunctionSpaces spaces;
  MaterialLaw law;
  RegularizationParams reg;
  VectorFn body_force;                     // f
  std::map<BoundaryTag, VectorFn> tractions;
  TensorFn stress_source;                  // G on the constitutive side, optional
  VectorFn dirichlet_g;                    // boundary displacement, optional (zero)
};

struct SolverConfig {
  double tau = 0.01;
  double tol = 1e-5;      // outer stopping tolerance on the relative increment
  double sub_tol = 0.0;   // subiteration tolerance; defaults to tol/5
  int max_outer = 500000;
  int max_sub = 500;
  enum class LinearSolver { Direct, ConjugateGradient } linear = LinearSolver::Direct;
  double cg_tol = 1e-12;

  double effective_sub_tol() const { return sub_tol > 0 ? sub_tol : tol / 5.0; }
};

struct IterationState {
  StressField T, T_half;
  DisplacementField u;
  int iterations = 0;
  int total_subiterations = 0;
  bool converged = false;
  double final_quotient = 0.0;
  std::vector<double> quotient_history;
  std::vector<double> constraint_residual_history;  // absolute, after every step 2
};

struct MonitorNorms {
  double lambda_dist = 0;  // || Lambda^(k) - Lambda* ||_L2
  double theta_dist = 0;   // || Theta^(k)  - Theta*  ||_L2
  double t_dist = 0;       // || T^(k) - T* ||_L2
};

// Alternating resolvent iteration for the mixed stress/displacement system:
// the monotone constitutive part is resolved element by element (step 1) and
// the coercive constrained part by a Schur-complement solve (step 2).
// Requires piecewise-constant stress.
class DecoupledSolver {
public:
  DecoupledSolver(const Problem& problem, const SolverConfig& config);

  // (T^(0), u^(0)): stress lift of the load combined with the projected
  // strain plus stress source.
  std::pair<StressField, DisplacementField> initialize();

  // Element-local monotone solves for T^(k+1/2).
  StressField step1(const StressField& T, const DisplacementField& u) const;

  // Linear constrained solve, t = 1 regularization.
  std::pair<StressField, DisplacementField> step2_linear(const StressField& T_half);

  // Frozen-coefficient subiterations for the power-law regularizer, t > 1.
  std::pair<StressField, DisplacementField> step2_nonlinear(
      const StressField& T_half, const StressField& T_start,
      const DisplacementField& u_start, int* subiterations = nullptr);

  using Observer =
      std::function<void(int k, const StressField& T, const DisplacementField& u)>;
  IterationState run(const Observer& observer = nullptr);

  // Elasticity post-processing of the displacement from a stress iterate.
  DisplacementField postprocess_displacement(const StressField& T);

  MonitorNorms lm_monitors(const StressField& T, const DisplacementField& u,
                           const StressField& T_ref, const DisplacementField& u_ref) const;

  double constraint_residual(const StressField& T) const;  // || B T - load ||
  double load_norm() const;
  double stress_l2(const Eigen::VectorXd& coeffs) const;   // sqrt(x' M x)

  const Assembly& assembly() const { return asm_; }
  const FunctionSpaces& spaces() const { return prob_.spaces; }
  const Problem& problem() const { return prob_; }

private:
  Eigen::VectorXd solve_schur0(const Eigen::VectorXd& rhs);
  Eigen::VectorXd lambda_vec(const StressField& T, const DisplacementField& u) const;

  Problem prob_;
  SolverConfig cfg_;
  Assembly asm_;
  Eigen::VectorXd load_free_;
  Eigen::VectorXd lift_;       // E_full * u_g
  Eigen::VectorXd lift_coef_;  // Minv * lift_
  Eigen::VectorXd g_source_;   // \int G : S
  Eigen::VectorXd g_proj_;     // Minv * g_source_
  Eigen::VectorXd strain_dual_G_;  // \int G : eps(phi), for post-processing
  SparseMat S0_;
  Eigen::SimplicialLDLT<SparseMat> schur0_;
  bool schur0_ready_ = false;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMat>> weighted_;  // pattern cached
  SparseMat Keps_free_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMat>> post_;
  Eigen::VectorXd post_lift_rhs_;
  Eigen::VectorXd last_uf_;  // CG warm start
};

// One-shot linear mixed solve of  \int T:S - \int eps(u):S + \int eps(v):T =
// \int f.v  with Dirichlet datum g; works for P0 and Q1Disc stress.
struct LinearMixedResult {
  StressField T;
  DisplacementField u;
};

LinearMixedResult solve_linear_identity(const FunctionSpaces& sp, const VectorFn& f,
                                        const VectorFn& g);

// Mixed system on the inf-sup stable discontinuous-Q1 stress pair, solved by
// frozen-coefficient sweeps: the constitutive coefficients (and power-law
// denominators for t > 1) are evaluated at the previous iterate, giving one
// linear Schur solve per sweep. Requires Q1Disc stress in the problem spaces.
struct StablePairResult {
  StressField T;
  DisplacementField u;
  int iterations = 0;
  bool converged = false;
};

StablePairResult solve_stable_pair(const Problem& p, double tol = 1e-11, int max_iter = 1200);

}  // namespace slfem
