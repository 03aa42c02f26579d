#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "slfem/experiments.hpp"
#include "slfem/solver.hpp"

using namespace slfem;

namespace {

Problem zero_load_problem(const Mesh& mesh) {
  Problem p;
  p.spaces = make_spaces(mesh, StressSpace::P0, {BoundaryTag::DirichletAll});
  p.law = builtin_law();
  p.reg = {1.0, 1.0};
  return p;
}

// Dense KKT solve of  c M T - E u = rhs_T,  E^T T = load.
std::pair<Eigen::VectorXd, Eigen::VectorXd> dense_saddle(const Assembly& a,
                                                         const FunctionSpaces& sp, double c,
                                                         const Eigen::VectorXd& rhs_T,
                                                         const Eigen::VectorXd& load) {
  const int ns = sp.n_stress_dof, nu = sp.n_free;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ns + nu, ns + nu);
  K.topLeftCorner(ns, ns) = c * Eigen::MatrixXd(a.M);
  K.topRightCorner(ns, nu) = -Eigen::MatrixXd(a.E_free);
  K.bottomLeftCorner(nu, ns) = Eigen::MatrixXd(a.E_free).transpose();
  Eigen::VectorXd rhs(ns + nu);
  rhs << rhs_T, load;
  const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
  return {sol.head(ns), sol.tail(nu)};
}

}  // namespace

TEST_CASE("initialization: trivial and manufactured") {
  const Mesh mesh = uniform_square_mesh(4);
  DecoupledSolver solver(zero_load_problem(mesh), {});
  const auto [T0, u0] = solver.initialize();
  CHECK(T0.coeffs.norm() == 0.0);
  CHECK(u0.values.norm() == 0.0);

  const Mesh mesh3 = uniform_square_mesh(8);
  const Problem prob = make_validation_problem(mesh3, StressSpace::P0, {1.0, 1.0}, true);
  DecoupledSolver vsolver(prob, {});
  const auto [T, u] = vsolver.initialize();
  CHECK(vsolver.constraint_residual(T) <= 1e-10 * std::max(1.0, vsolver.load_norm()));
}

TEST_CASE("initialization matches a dense saddle-point oracle") {
  const Mesh mesh = uniform_square_mesh(2);
  Problem p = zero_load_problem(mesh);
  p.body_force = [](const Eigen::Vector2d&) { return Eigen::Vector2d(1.0, 0.0); };
  DecoupledSolver solver(p, {});
  const auto [T, u] = solver.initialize();

  const Assembly& a = solver.assembly();
  const Eigen::VectorXd load =
      restrict_to_free(p.spaces, assemble_load(p.spaces, p.body_force));
  const auto [Td, ud] = dense_saddle(a, p.spaces, 1.0, Eigen::VectorXd::Zero(p.spaces.n_stress_dof),
                                     load);
  CHECK((T.coeffs - Td).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((free_part(p.spaces, u) - ud).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("step 2 solves the constrained linear system") {
  const Mesh mesh = uniform_square_mesh(2);
  Problem p = zero_load_problem(mesh);
  p.body_force = [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.y(), 1.0); };
  SolverConfig cfg;
  cfg.tau = 1e12;  // tau -> infinity: step 2 becomes one exact mixed solve
  DecoupledSolver solver(p, cfg);

  std::mt19937 rng(3);
  StressField T_half = zero_stress(p.spaces);
  for (int cell = 0; cell < p.spaces.n_cells(); ++cell)
    T_half.set(p.spaces, cell, 0, oracles::random_sym2(rng));
  const auto [T, u] = solver.step2_linear(T_half);

  // constraint enforced by construction
  CHECK(solver.constraint_residual(T) <= 1e-10 * std::max(1.0, solver.load_norm()));

  const Assembly& a = solver.assembly();
  Eigen::VectorXd rhs_T(p.spaces.n_stress_dof);
  for (int cell = 0; cell < p.spaces.n_cells(); ++cell) {
    const SymTensor2 th = T_half.at(p.spaces, cell, 0);
    const SymTensor2 y = th * (1.0 / cfg.tau) - apply_A(th, p.law);
    tensor_to_coeff(y, rhs_T, p.spaces.sdof(cell, 0, 0));
  }
  rhs_T = a.M_diag.cwiseProduct(rhs_T);
  const Eigen::VectorXd load =
      restrict_to_free(p.spaces, assemble_load(p.spaces, p.body_force));
  const double c = 1.0 / cfg.tau + 1.0;
  const auto [Td, ud] = dense_saddle(a, p.spaces, c, rhs_T, load);
  CHECK((T.coeffs - Td).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((free_part(p.spaces, u) - ud).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("zero-load run converges immediately to zero") {
  const Mesh mesh = uniform_square_mesh(4);
  DecoupledSolver solver(zero_load_problem(mesh), {});
  const IterationState st = solver.run();
  CHECK(st.converged);
  CHECK(st.iterations == 1);
  CHECK(st.T.coeffs.norm() == 0.0);
  CHECK(st.u.values.norm() == 0.0);
}

TEST_CASE("fixed point: step 1 followed by step 2 is the identity") {
  const Mesh mesh = uniform_square_mesh(8);
  const Problem prob = make_validation_problem(mesh, StressSpace::P0, {1.0, 1.0}, true);
  SolverConfig cfg;
  cfg.tau = 0.5;
  cfg.tol = 1e-12;
  DecoupledSolver solver(prob, cfg);
  const IterationState st = solver.run();
  REQUIRE(st.converged);

  const StressField T_half = solver.step1(st.T, st.u);
  const auto [T1, u1] = solver.step2_linear(T_half);
  CHECK((T1.coeffs - st.T.coeffs).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((u1.values - st.u.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fixed point for the power-law step 2") {
  const Mesh mesh = uniform_square_mesh(4);
  const Problem prob = make_validation_problem(mesh, StressSpace::P0, {2.0, 2.0}, true);
  SolverConfig cfg;
  cfg.tau = 0.5;
  cfg.tol = 1e-12;
  cfg.sub_tol = 1e-13;
  DecoupledSolver solver(prob, cfg);
  const IterationState st = solver.run();
  REQUIRE(st.converged);

  const StressField T_half = solver.step1(st.T, st.u);
  const auto [T1, u1] = solver.step2_nonlinear(T_half, st.T, st.u);
  CHECK((T1.coeffs - st.T.coeffs).cwiseAbs().maxCoeff() < 1e-8);
  // constraint after the nonlinear step
  CHECK(solver.constraint_residual(T1) <= 1e-10 * std::max(1.0, solver.load_norm()));
}

TEST_CASE("power-law step 2 approaches the linear one as t -> 1") {
  const Mesh mesh = uniform_square_mesh(4);
  const Problem lin = make_validation_problem(mesh, StressSpace::P0, {2.0, 1.0}, true);
  Problem near = lin;
  near.reg.t = 1.0 + 1e-8;
  SolverConfig cfg;
  cfg.tau = 0.5;
  cfg.sub_tol = 1e-12;
  DecoupledSolver ls(lin, cfg);
  DecoupledSolver ns(near, cfg);

  auto [T0, u0] = ls.initialize();
  const StressField T_half = ls.step1(T0, u0);
  const auto [Tl, ul] = ls.step2_linear(T_half);
  const auto [Tn, un] = ns.step2_nonlinear(T_half, T0, u0);
  CHECK((Tl.coeffs - Tn.coeffs).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((ul.values - un.values).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("monitor identities along the iteration") {
  const Mesh mesh = uniform_square_mesh(8);
  const Problem prob = make_validation_problem(mesh, StressSpace::P0, {1.0, 1.0}, true);
  SolverConfig ref_cfg;
  ref_cfg.tau = 0.01;
  ref_cfg.tol = 1e-12;
  DecoupledSolver ref_solver(prob, ref_cfg);
  const IterationState ref = ref_solver.run();
  REQUIRE(ref.converged);

  // at the fixed point all monitor distances vanish
  const MonitorNorms at_ref = ref_solver.lm_monitors(ref.T, ref.u, ref.T, ref.u);
  CHECK(at_ref.lambda_dist == 0.0);
  CHECK(at_ref.theta_dist == 0.0);

  SolverConfig cfg;
  cfg.tau = 0.01;
  cfg.tol = 1e-5;
  DecoupledSolver solver(prob, cfg);
  std::vector<MonitorNorms> hist;
  const IterationState st = solver.run([&](int, const StressField& T, const DisplacementField& u) {
    hist.push_back(solver.lm_monitors(T, u, ref.T, ref.u));
  });
  REQUIRE(st.converged);
  REQUIRE(hist.size() > 10);

  const double tau = cfg.tau, n = prob.reg.n;
  const double scale = hist.front().lambda_dist;
  for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
    // (7.9) chain: ||Lambda^{k+1}-Lambda|| <= ||Theta^k-Theta|| <= ||Lambda^k-Lambda||
    CHECK(hist[k + 1].lambda_dist <= hist[k].theta_dist + 1e-10 * scale);
    CHECK(hist[k].theta_dist <= hist[k].lambda_dist + 1e-10 * scale);
    // (7.5) identity: (1/n)||T-T*||^2 = (1/4 tau)(||L||^2 - ||Th||^2)
    const double lhs = hist[k].t_dist * hist[k].t_dist / n;
    const double rhs = (hist[k].lambda_dist * hist[k].lambda_dist -
                        hist[k].theta_dist * hist[k].theta_dist) /
                       (4.0 * tau);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8).scale(scale * scale));
  }
}

TEST_CASE("constraint holds after every step 2 for arbitrary input") {
  const Mesh mesh = uniform_square_mesh(8);
  const Problem prob = make_validation_problem(mesh, StressSpace::P0, {1.0, 1.0}, true);
  DecoupledSolver solver(prob, {});
  std::mt19937 rng(17);
  StressField T_half = zero_stress(prob.spaces);
  for (int cell = 0; cell < prob.spaces.n_cells(); ++cell)
    T_half.set(prob.spaces, cell, 0, oracles::random_sym2(rng, 5.0));
  const auto [T, u] = solver.step2_linear(T_half);
  CHECK(solver.constraint_residual(T) <= 1e-10 * solver.load_norm());
}

TEST_CASE("post-processed displacement") {
  // on the simplicial pair eps(X_h) lies in the stress space, so the
  // post-processed displacement reproduces the converged one up to the
  // stopping tolerance
  const Mesh mesh = split_to_triangles(uniform_square_mesh(8));
  const Problem prob = make_validation_problem(mesh, StressSpace::P0, {1.0, 1.0}, true);
  SolverConfig cfg;
  cfg.tau = 0.5;
  cfg.tol = 1e-9;
  DecoupledSolver solver(prob, cfg);

  // T = 0 with zero boundary data gives u = 0
  {
    const Mesh m0 = uniform_square_mesh(4);
    DecoupledSolver zs(zero_load_problem(m0), {});
    const DisplacementField u0 = zs.postprocess_displacement(zero_stress(zs.spaces()));
    CHECK(u0.values.norm() == 0.0);
  }

  const IterationState st = solver.run();
  REQUIRE(st.converged);
  const DisplacementField ut = solver.postprocess_displacement(st.T);
  DisplacementField du;
  du.values = ut.values - st.u.values;
  const double rel = grad_l2_norm(prob.spaces, du) / grad_l2_norm(prob.spaces, st.u);
  CHECK(rel <= 10.0 * cfg.tol);
}

TEST_CASE("post-processing matches a dense elasticity oracle for a frozen law") {
  const Mesh mesh = uniform_square_mesh(2);
  Problem p;
  p.spaces = make_spaces(mesh, StressSpace::P0, {BoundaryTag::DirichletAll});
  p.law = constant_law(0.7, 1.3);
  p.reg = {2.0, 1.0};
  DecoupledSolver solver(p, {});

  std::mt19937 rng(23);
  StressField T = zero_stress(p.spaces);
  for (int cell = 0; cell < p.spaces.n_cells(); ++cell)
    T.set(p.spaces, cell, 0, oracles::random_sym2(rng));
  const DisplacementField ut = solver.postprocess_displacement(T);

  // dense oracle: K u = E^T a with a = A(T) + T/n
  const SparseMat K = assemble_strain_stiffness(p.spaces);
  std::vector<Eigen::Triplet<double>> tp;
  for (int d = 0; d < 2 * p.spaces.n_nodes(); ++d)
    if (p.spaces.free_index[d] >= 0) tp.emplace_back(d, p.spaces.free_index[d], 1.0);
  SparseMat P(2 * p.spaces.n_nodes(), p.spaces.n_free);
  P.setFromTriplets(tp.begin(), tp.end());
  const Eigen::MatrixXd Kff = Eigen::MatrixXd(P.transpose() * K * P);
  Eigen::VectorXd a(p.spaces.n_stress_dof);
  for (int cell = 0; cell < p.spaces.n_cells(); ++cell) {
    const SymTensor2 tk = T.at(p.spaces, cell, 0);
    tensor_to_coeff(apply_A(tk, p.law) + tk / p.reg.n, a, p.spaces.sdof(cell, 0, 0));
  }
  const Eigen::VectorXd rhs =
      P.transpose() * (solver.assembly().E_full.transpose() * a);
  const Eigen::VectorXd ud = Kff.fullPivLu().solve(rhs);
  CHECK((free_part(p.spaces, ut) - ud).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("stress L1 bound from the a-priori estimate") {
  // pure-Dirichlet t=n problems (no constitutive source): the computed L1
  // norm of the stress obeys the explicit a-priori bound with F the exact
  // stress lift of the body force and C1 = C2 = kappa = 1.
  for (double n : {1.0, 2.0}) {
    const Mesh mesh = uniform_square_mesh(16);
    Problem p;
    p.spaces = make_spaces(mesh, StressSpace::P0, {BoundaryTag::DirichletAll});
    p.law = builtin_law();
    p.reg = {n, n, RegularizationParams::Form::Split};
    p.body_force = manufactured::body_force;
    SolverConfig cfg;
    cfg.tau = 0.5;
    cfg.tol = 1e-8;
    DecoupledSolver solver(p, cfg);
    const IterationState st = solver.run();
    REQUIRE(st.converged);

    const double q = 1.0 + 1.0 / n;
    double Fq = 0.0;
    for (int cell = 0; cell < p.spaces.n_cells(); ++cell)
      for (const auto& qp : quad_rule(5)) {
        const ElemPoint ep = elem_point(mesh, cell, qp.xi, qp.eta, qp.w);
        Fq += ep.jxw * std::pow(frobenius_norm(manufactured::T_exact(ep.x)), q);
      }
    const double F_norm = std::pow(Fq, 1.0 / q);
    const double d = 2.0, area = 1.0;
    const double rhs = 16.0 * d * d / (n + 1.0) * std::pow(F_norm, q) +
                       2.0 * std::sqrt(2.0 * d) * std::pow(area, 1.0 / (n + 1.0)) * F_norm +
                       4.0 * area;
    const double T_l1 = stress_lp_norm(p.spaces, st.T, 1.0);
    CHECK(T_l1 <= rhs);
  }
}

TEST_CASE("stable-pair solve satisfies the constraint and its own system") {
  const Mesh mesh = uniform_square_mesh(8);
  const Problem prob = make_validation_problem(mesh, StressSpace::Q1Disc, {1.0, 1.0}, true);
  const StablePairResult res = solve_stable_pair(prob);
  REQUIRE(res.converged);
  const Assembly a = assemble_coupling(prob.spaces);
  const Eigen::VectorXd load =
      restrict_to_free(prob.spaces, assemble_load(prob.spaces, prob.body_force));
  CHECK((a.E_free.transpose() * res.T.coeffs - load).norm() <= 1e-9 * load.norm());
}
