#include "slfem/solver.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>

namespace slfem {

namespace {

// Stress field arithmetic in coefficient space.
Eigen::VectorXd stress_map(const FunctionSpaces& sp, const Eigen::VectorXd& in,
                           const std::function<SymTensor2(const SymTensor2&, int)>& f) {
  Eigen::VectorXd out(in.size());
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    const int base = sp.sdof(cell, 0, 0);
    tensor_to_coeff(f(coeff_to_tensor(in, base), cell), out, base);
  }
  return out;
}

double stress_lp(const FunctionSpaces& sp, const Eigen::VectorXd& coeffs, double p) {
  StressField T{coeffs};
  return stress_lp_norm(sp, T, p);
}

}  // namespace

DecoupledSolver::DecoupledSolver(const Problem& problem, const SolverConfig& config)
    : prob_(problem), cfg_(config) {
  const FunctionSpaces& sp = prob_.spaces;
  if (sp.stress != StressSpace::P0)
    throw std::invalid_argument("DecoupledSolver: iterative path requires P0/Q0 stress");
  asm_ = assemble_coupling(sp);

  const DisplacementField ug = make_displacement(sp, prob_.dirichlet_g);
  lift_ = asm_.E_full * ug.values;
  lift_coef_ = asm_.Minv_diag.cwiseProduct(lift_);
  load_free_ = restrict_to_free(sp, assemble_load(sp, prob_.body_force, prob_.tractions));
  g_source_ = assemble_stress_source(sp, prob_.stress_source);
  g_proj_ = asm_.Minv_diag.cwiseProduct(g_source_);
  if (prob_.stress_source) strain_dual_G_ = assemble_strain_dual(sp, prob_.stress_source);

  if (sp.n_free > 0) {
    S0_ = asm_.E_free.transpose() * asm_.Minv_diag.asDiagonal() * asm_.E_free;
    if (cfg_.linear == SolverConfig::LinearSolver::Direct) {
      schur0_.compute(S0_);
      if (schur0_.info() != Eigen::Success)
        throw std::runtime_error(
            "DecoupledSolver: singular Schur complement (missing Dirichlet constraints?)");
      schur0_ready_ = true;
    }
  }
  last_uf_ = Eigen::VectorXd::Zero(sp.n_free);
}

Eigen::VectorXd DecoupledSolver::solve_schur0(const Eigen::VectorXd& rhs) {
  const FunctionSpaces& sp = prob_.spaces;
  if (sp.n_free == 0) return Eigen::VectorXd();
  if (cfg_.linear == SolverConfig::LinearSolver::Direct) return schur0_.solve(rhs);
  Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(cfg_.cg_tol);
  cg.compute(S0_);
  const Eigen::VectorXd uf = cg.solveWithGuess(rhs, last_uf_);
  if (cg.info() != Eigen::Success && cg.error() > std::sqrt(cfg_.cg_tol))
    throw std::runtime_error("DecoupledSolver: CG did not converge");
  return uf;
}

std::pair<StressField, DisplacementField> DecoupledSolver::initialize() {
  const FunctionSpaces& sp = prob_.spaces;
  DisplacementField u = make_displacement(sp, prob_.dirichlet_g);
  Eigen::VectorXd uf;
  if (sp.n_free > 0) {
    const Eigen::VectorXd rhs =
        load_free_ - asm_.E_free.transpose() *
                         (asm_.Minv_diag.cwiseProduct(lift_ + g_source_));
    uf = solve_schur0(rhs);
    last_uf_ = uf;
    set_free_part(sp, u, uf);
  }
  StressField T;
  T.coeffs = asm_.Minv_diag.cwiseProduct(asm_.E_full * u.values + g_source_);
  return {T, u};
}

StressField DecoupledSolver::step1(const StressField& T, const DisplacementField& u) const {
  const FunctionSpaces& sp = prob_.spaces;
  const Eigen::VectorXd eps_g = strain_projection(asm_, u.values) + g_proj_;
  const double inv_tau = 1.0 / cfg_.tau;
  StressField out = zero_stress(sp);
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    const SymTensor2 Tk = T.at(sp, cell, 0);
    const int base = sp.sdof(cell, 0, 0);
    SymTensor2 rhat = coeff_to_tensor(eps_g, base);
    rhat += Tk * inv_tau - regularizer(Tk, prob_.reg);
    try {
      out.set(sp, cell, 0, solve_local_step1(Tk, rhat, cfg_.tau, prob_.law));
    } catch (const std::exception& e) {
      throw std::runtime_error("step1: local solve failed on cell " + std::to_string(cell) +
                               ": " + e.what());
    }
  }
  return out;
}

std::pair<StressField, DisplacementField> DecoupledSolver::step2_linear(
    const StressField& T_half) {
  const FunctionSpaces& sp = prob_.spaces;
  const double c = 1.0 / cfg_.tau + 1.0 / prob_.reg.n;
  const double inv_tau = 1.0 / cfg_.tau;
  const Eigen::VectorXd r2 = stress_map(sp, T_half.coeffs, [&](const SymTensor2& t, int) {
    return t * inv_tau - apply_A(t, prob_.law);
  });
  const Eigen::VectorXd rhs_dual = asm_.M_diag.cwiseProduct(r2) + g_source_;

  DisplacementField u = make_displacement(sp, prob_.dirichlet_g);
  if (sp.n_free > 0) {
    const Eigen::VectorXd rhs =
        c * load_free_ -
        asm_.E_free.transpose() * (asm_.Minv_diag.cwiseProduct(rhs_dual + lift_));
    const Eigen::VectorXd uf = solve_schur0(rhs);
    last_uf_ = uf;
    set_free_part(sp, u, uf);
  }
  StressField T;
  T.coeffs =
      (asm_.Minv_diag.cwiseProduct(rhs_dual + asm_.E_full * u.values)) / c;
  return {T, u};
}

std::pair<StressField, DisplacementField> DecoupledSolver::step2_nonlinear(
    const StressField& T_half, const StressField& T_start, const DisplacementField& u_start,
    int* subiterations) {
  const FunctionSpaces& sp = prob_.spaces;
  const Mesh& m = *sp.mesh;
  const double inv_tau = 1.0 / cfg_.tau;
  const double n = prob_.reg.n;
  const double t = prob_.reg.t;
  const double pw = 1.0 - 1.0 / t;
  const double floor = 1e-12;
  const bool split = prob_.reg.form == RegularizationParams::Form::Split;
  const double p = t == 1.0 ? 2.0 : 1.0;

  const Eigen::VectorXd r2 =
      stress_map(sp, T_half.coeffs,
                 [&](const SymTensor2& th, int) { return th * inv_tau - apply_A(th, prob_.law); }) +
      g_proj_;

  Eigen::VectorXd Tprev = T_start.coeffs;
  DisplacementField u = u_start;
  DisplacementField u_prev = u_start;
  StressField T;
  T.coeffs = Tprev;
  const double sub_tol = cfg_.effective_sub_tol();
  int it = 0;
  for (; it < cfg_.max_sub; ++it) {
    // resolvent weights with denominators frozen at the previous subiterate;
    // the radial form scales the whole tensor (wtr = wdev), the split form
    // scales trace and deviatoric parts separately
    std::vector<double> wtr(sp.n_cells()), wdev(sp.n_cells());
    for (int cell = 0; cell < sp.n_cells(); ++cell) {
      const int base = sp.sdof(cell, 0, 0);
      const SymTensor2 tp = coeff_to_tensor(Tprev, base);
      if (split) {
        const double dtr = std::pow(std::abs(trace(tp)), pw) + floor;
        const double ddev = std::pow(frobenius_norm(deviatoric(tp)), pw) + floor;
        wtr[cell] = 1.0 / (inv_tau + 2.0 / (n * dtr));
        wdev[cell] = 1.0 / (inv_tau + 1.0 / (n * ddev));
      } else {
        const double dfull = std::pow(frobenius_norm(tp), pw) + floor;
        wtr[cell] = wdev[cell] = 1.0 / (inv_tau + 1.0 / (n * dfull));
      }
    }

    // weighted Schur complement on the free displacement dofs
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = load_free_;
    const int npc = m.nodes_per_cell();
    for (int cell = 0; cell < sp.n_cells(); ++cell) {
      const auto& Ec = asm_.E_cell[cell];
      Eigen::Matrix3d W;
      const double wd = wdev[cell], b2 = 0.5 * (wtr[cell] - wd);
      W << wd + b2, b2, 0, b2, wd + b2, 0, 0, 0, wd;
      const Eigen::Matrix<double, 8, 8> Sk =
          Ec.transpose() * (W / sp.cell_areas[cell]) * Ec;
      const int base = sp.sdof(cell, 0, 0);
      const Eigen::Vector3d qk =
          W *
          (Eigen::Vector3d(lift_coef_[base], lift_coef_[base + 1], lift_coef_[base + 2]) +
           Eigen::Vector3d(r2[base], r2[base + 1], r2[base + 2]));
      const Eigen::Matrix<double, 8, 1> fk = Ec.transpose() * qk;
      const auto& conn = m.cells[cell];
      for (int a1 = 0; a1 < npc; ++a1)
        for (int d1 = 0; d1 < 2; ++d1) {
          const int gi = sp.free_index[2 * conn[a1] + d1];
          if (gi < 0) continue;
          rhs[gi] -= fk(2 * a1 + d1);
          for (int a2 = 0; a2 < npc; ++a2)
            for (int d2 = 0; d2 < 2; ++d2) {
              const int gj = sp.free_index[2 * conn[a2] + d2];
              if (gj >= 0) trip.emplace_back(gi, gj, Sk(2 * a1 + d1, 2 * a2 + d2));
            }
        }
    }

    if (sp.n_free > 0) {
      SparseMat SW(sp.n_free, sp.n_free);
      SW.setFromTriplets(trip.begin(), trip.end());
      if (!weighted_) {
        weighted_ = std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
        weighted_->analyzePattern(SW);
      }
      weighted_->factorize(SW);
      if (weighted_->info() != Eigen::Success)
        throw std::runtime_error("step2_nonlinear: weighted Schur factorization failed");
      const Eigen::VectorXd uf = weighted_->solve(rhs);
      last_uf_ = uf;
      set_free_part(sp, u, uf);
    }

    const Eigen::VectorXd eps_r2 = strain_projection(asm_, u.values) + r2;
    Eigen::VectorXd Tnew(Tprev.size());
    for (int cell = 0; cell < sp.n_cells(); ++cell) {
      const int base = sp.sdof(cell, 0, 0);
      const SymTensor2 rhsK = coeff_to_tensor(eps_r2, base);
      const double tr = trace(rhsK);
      SymTensor2 Tk = deviatoric(rhsK) * wdev[cell];
      Tk[0] += wtr[cell] * tr / 2.0;
      Tk[1] += wtr[cell] * tr / 2.0;
      tensor_to_coeff(Tk, Tnew, base);
    }

    DisplacementField du;
    du.values = u.values - u_prev.values;
    const double num = stress_lp(sp, Tnew - Tprev, p) + grad_l2_norm(sp, du);
    const double den = stress_lp(sp, Tprev, p) + grad_l2_norm(sp, u_prev);
    Tprev = Tnew;
    u_prev = u;
    T.coeffs = Tnew;
    const double q = den > 1e-14 ? num / den : num;
    if (q <= sub_tol) {
      ++it;
      break;
    }
  }
  if (subiterations) *subiterations = it;
  if (it >= cfg_.max_sub)
    throw std::runtime_error("step2_nonlinear: subiteration cap reached");
  return {T, u};
}

IterationState DecoupledSolver::run(const Observer& observer) {
  IterationState st;
  auto [T, u] = initialize();
  st.constraint_residual_history.push_back(constraint_residual(T));
  if (observer) observer(0, T, u);
  const double p = prob_.reg.t == 1.0 ? 2.0 : 1.0;

  for (int k = 0; k < cfg_.max_outer; ++k) {
    const StressField T_half = step1(T, u);
    StressField Tn;
    DisplacementField un;
    if (prob_.reg.t == 1.0 && prob_.reg.form == RegularizationParams::Form::Auto) {
      std::tie(Tn, un) = step2_linear(T_half);
    } else {
      int sub = 0;
      std::tie(Tn, un) = step2_nonlinear(T_half, T, u, &sub);
      st.total_subiterations += sub;
    }

    DisplacementField du;
    du.values = un.values - u.values;
    const double num = stress_lp(prob_.spaces, Tn.coeffs - T.coeffs, p) +
                       grad_l2_norm(prob_.spaces, du);
    const double den =
        stress_lp(prob_.spaces, T.coeffs, p) + grad_l2_norm(prob_.spaces, u);
    const double q = den > 1e-14 ? num / den : num;

    T = Tn;
    u = un;
    st.iterations = k + 1;
    st.final_quotient = q;
    st.quotient_history.push_back(q);
    st.constraint_residual_history.push_back(constraint_residual(T));
    st.T_half = T_half;
    if (observer) observer(k + 1, T, u);
    if (q <= cfg_.tol) {
      st.converged = true;
      break;
    }
  }
  st.T = T;
  st.u = u;
  return st;
}

DisplacementField DecoupledSolver::postprocess_displacement(const StressField& T) {
  const FunctionSpaces& sp = prob_.spaces;
  if (prob_.reg.t != 1.0 || prob_.reg.form != RegularizationParams::Form::Auto)
    throw std::invalid_argument("postprocess_displacement: defined for the linear t = 1 path");
  if (!post_) {
    const SparseMat K = assemble_strain_stiffness(sp);
    std::vector<Eigen::Triplet<double>> tp;
    for (int d = 0; d < 2 * sp.n_nodes(); ++d)
      if (sp.free_index[d] >= 0) tp.emplace_back(d, sp.free_index[d], 1.0);
    SparseMat P(2 * sp.n_nodes(), sp.n_free);
    P.setFromTriplets(tp.begin(), tp.end());
    Keps_free_ = P.transpose() * K * P;
    post_ = std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
    post_->compute(Keps_free_);
    if (post_->info() != Eigen::Success)
      throw std::runtime_error("postprocess_displacement: singular stiffness");
    const DisplacementField ug = make_displacement(sp, prob_.dirichlet_g);
    post_lift_rhs_ = restrict_to_free(sp, K * ug.values);
  }
  const Eigen::VectorXd an1 = stress_map(sp, T.coeffs, [&](const SymTensor2& t, int) {
    return apply_A(t, prob_.law) + t / prob_.reg.n;
  });
  Eigen::VectorXd rhs_full = asm_.E_full.transpose() * an1;
  if (strain_dual_G_.size() > 0) rhs_full -= strain_dual_G_;
  const Eigen::VectorXd rhs = restrict_to_free(sp, rhs_full) - post_lift_rhs_;
  DisplacementField u = make_displacement(sp, prob_.dirichlet_g);
  if (sp.n_free > 0) set_free_part(sp, u, post_->solve(rhs));
  return u;
}

Eigen::VectorXd DecoupledSolver::lambda_vec(const StressField& T,
                                            const DisplacementField& u) const {
  const Eigen::VectorXd eps = strain_projection(asm_, u.values);
  return T.coeffs + cfg_.tau * (T.coeffs / prob_.reg.n - eps);
}

MonitorNorms DecoupledSolver::lm_monitors(const StressField& T, const DisplacementField& u,
                                          const StressField& T_ref,
                                          const DisplacementField& u_ref) const {
  const Eigen::VectorXd lam = lambda_vec(T, u);
  const Eigen::VectorXd lam_ref = lambda_vec(T_ref, u_ref);
  const Eigen::VectorXd theta = 2.0 * T.coeffs - lam;
  const Eigen::VectorXd theta_ref = 2.0 * T_ref.coeffs - lam_ref;
  MonitorNorms mn;
  mn.lambda_dist = stress_l2(lam - lam_ref);
  mn.theta_dist = stress_l2(theta - theta_ref);
  mn.t_dist = stress_l2(T.coeffs - T_ref.coeffs);
  return mn;
}

double DecoupledSolver::constraint_residual(const StressField& T) const {
  if (prob_.spaces.n_free == 0) return 0.0;
  return (asm_.E_free.transpose() * T.coeffs - load_free_).norm();
}

double DecoupledSolver::load_norm() const { return load_free_.norm(); }

double DecoupledSolver::stress_l2(const Eigen::VectorXd& coeffs) const {
  return std::sqrt(coeffs.dot(asm_.M_diag.cwiseProduct(coeffs)));
}

StablePairResult solve_stable_pair(const Problem& p, double tol, int max_iter) {
  const FunctionSpaces& sp = p.spaces;
  if (sp.stress != StressSpace::Q1Disc)
    throw std::invalid_argument("solve_stable_pair: expects Q1Disc stress");
  const Mesh& m = *sp.mesh;
  const Assembly a = assemble_coupling(sp);
  const Eigen::VectorXd gsrc = assemble_stress_source(sp, p.stress_source);
  const Eigen::VectorXd load =
      restrict_to_free(sp, assemble_load(sp, p.body_force, p.tractions));
  const DisplacementField ug = make_displacement(sp, p.dirichlet_g);

  // cached per-cell coupling blocks (12 stress dofs x 8 displacement dofs)
  std::vector<Eigen::Matrix<double, 12, 8>> Ec(sp.n_cells());
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    Ec[cell].setZero();
    const auto& conn = m.cells[cell];
    for (int i = 0; i < 12; ++i) {
      const int row = sp.sdof(cell, i / 3, i % 3);
      for (int an = 0; an < 4; ++an)
        for (int d = 0; d < 2; ++d)
          Ec[cell](i, 2 * an + d) = a.E_full.coeff(row, 2 * conn[an] + d);
    }
  }

  const auto& rule = quad_rule(3);
  const Eigen::Vector3d uvec(1, 1, 0);
  const Eigen::Matrix3d UU = uvec * uvec.transpose();
  const double pw = 1.0 - 1.0 / p.reg.t;

  StablePairResult res;
  res.T = zero_stress(sp);
  res.u = ug;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMat>> schur;
  std::vector<Eigen::Matrix<double, 12, 12>> Ci(sp.n_cells());

  for (int it = 0; it < max_iter; ++it) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = load;
    for (int cell = 0; cell < sp.n_cells(); ++cell) {
      Eigen::Matrix<double, 12, 12> C = Eigen::Matrix<double, 12, 12>::Zero();
      for (const auto& q : rule) {
        const ElemPoint ep = elem_point(m, cell, q.xi, q.eta, q.w);
        const SymTensor2 Tp = stress_at(sp, res.T, cell, q.xi, q.eta);
        const double lp = p.law.lambda(trace(Tp));
        const double mp = p.law.mu(frobenius_norm(deviatoric(Tp)));
        Eigen::Matrix3d K = lp * UU + mp * (Eigen::Matrix3d::Identity() - 0.5 * UU);
        if (p.reg.form == RegularizationParams::Form::Split) {
          const double dtr = std::pow(std::abs(trace(Tp)), pw) + 1e-12;
          const double ddev = std::pow(frobenius_norm(deviatoric(Tp)), pw) + 1e-12;
          K += UU / (p.reg.n * dtr) +
               (Eigen::Matrix3d::Identity() - 0.5 * UU) / (p.reg.n * ddev);
        } else if (p.reg.t == 1.0) {
          K += Eigen::Matrix3d::Identity() / p.reg.n;
        } else {
          const double denom = std::pow(frobenius_norm(Tp), pw) + 1e-12;
          K += Eigen::Matrix3d::Identity() / (p.reg.n * denom);
        }
        for (int b = 0; b < 4; ++b)
          for (int b2 = 0; b2 < 4; ++b2) {
            const double sbb = ep.jxw * ep.shape[b] * ep.shape[b2];
            for (int c = 0; c < 3; ++c)
              for (int c2 = 0; c2 < 3; ++c2) C(b * 3 + c, b2 * 3 + c2) += sbb * K(c, c2);
          }
      }
      Ci[cell] = C.inverse();

      const auto& conn = m.cells[cell];
      Eigen::Matrix<double, 8, 1> ug_loc;
      Eigen::Matrix<double, 12, 1> gs_loc;
      for (int an = 0; an < 4; ++an)
        for (int d = 0; d < 2; ++d) ug_loc(2 * an + d) = ug.values[2 * conn[an] + d];
      for (int i = 0; i < 12; ++i) gs_loc(i) = gsrc[sp.sdof(cell, i / 3, i % 3)];

      const Eigen::Matrix<double, 12, 8> CiE = Ci[cell] * Ec[cell];
      const Eigen::Matrix<double, 8, 8> Sk = Ec[cell].transpose() * CiE;
      const Eigen::Matrix<double, 8, 1> fk =
          Ec[cell].transpose() * (Ci[cell] * (Ec[cell] * ug_loc + gs_loc));
      for (int a1 = 0; a1 < 8; ++a1) {
        const int gi = sp.free_index[2 * conn[a1 / 2] + a1 % 2];
        if (gi < 0) continue;
        rhs[gi] -= fk(a1);
        for (int a2 = 0; a2 < 8; ++a2) {
          const int gj = sp.free_index[2 * conn[a2 / 2] + a2 % 2];
          if (gj >= 0) trip.emplace_back(gi, gj, Sk(a1, a2));
        }
      }
    }
    SparseMat SW(sp.n_free, sp.n_free);
    SW.setFromTriplets(trip.begin(), trip.end());
    if (!schur) {
      schur = std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
      schur->analyzePattern(SW);
    }
    schur->factorize(SW);
    if (schur->info() != Eigen::Success)
      throw std::runtime_error("solve_stable_pair: factorization failed");
    set_free_part(sp, res.u, schur->solve(rhs));

    Eigen::VectorXd Tnew(sp.n_stress_dof);
    for (int cell = 0; cell < sp.n_cells(); ++cell) {
      const auto& conn = m.cells[cell];
      Eigen::Matrix<double, 8, 1> u_loc;
      Eigen::Matrix<double, 12, 1> gs_loc;
      for (int an = 0; an < 4; ++an)
        for (int d = 0; d < 2; ++d) u_loc(2 * an + d) = res.u.values[2 * conn[an] + d];
      for (int i = 0; i < 12; ++i) gs_loc(i) = gsrc[sp.sdof(cell, i / 3, i % 3)];
      const Eigen::Matrix<double, 12, 1> Tk = Ci[cell] * (Ec[cell] * u_loc + gs_loc);
      for (int i = 0; i < 12; ++i) Tnew[sp.sdof(cell, i / 3, i % 3)] = Tk(i);
    }
    const double inc = (Tnew - res.T.coeffs).norm() / (res.T.coeffs.norm() + 1e-30);
    res.T.coeffs = Tnew;
    res.iterations = it + 1;
    if (inc <= tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

LinearMixedResult solve_linear_identity(const FunctionSpaces& sp, const VectorFn& f,
                                        const VectorFn& g) {
  const Assembly a = assemble_coupling(sp);
  const DisplacementField ug = make_displacement(sp, g);
  const Eigen::VectorXd lift = a.E_full * ug.values;
  const Eigen::VectorXd load = restrict_to_free(sp, assemble_load(sp, f));

  LinearMixedResult res;
  res.u = ug;
  if (sp.n_free > 0) {
    const SparseMat S = a.E_free.transpose() * a.Minv * a.E_free;
    Eigen::SimplicialLDLT<SparseMat> solver(S);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("solve_linear_identity: singular Schur complement");
    const Eigen::VectorXd uf =
        solver.solve(load - a.E_free.transpose() * (a.Minv * lift));
    set_free_part(sp, res.u, uf);
  }
  res.T.coeffs = a.Minv * (a.E_full * res.u.values);
  return res;
}

}  // namespace slfem
