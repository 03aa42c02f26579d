#include "slfem/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "slfem/vtk.hpp"

namespace slfem {

namespace manufactured {

Eigen::Vector2d u_exact(const Eigen::Vector2d& p) {
  return {p.y() * (1.0 - p.y()), 0.0};
}

Eigen::Matrix2d grad_u_exact(const Eigen::Vector2d& p) {
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  g(0, 1) = 1.0 - 2.0 * p.y();
  return g;
}

SymTensor2 T_exact(const Eigen::Vector2d& p) {
  return SymTensor2::diagonal(std::exp(p.x()), std::cos(p.y()));
}

Eigen::Vector2d body_force(const Eigen::Vector2d& p) {
  return {-std::exp(p.x()), std::sin(p.y())};
}

SymTensor2 stress_source(const Eigen::Vector2d& p, const MaterialLaw& law,
                         const RegularizationParams& reg, bool with_reg) {
  const SymTensor2 T = T_exact(p);
  SymTensor2 G = apply_A(T, law) - SymTensor2::from_matrix(
                     0.5 * (grad_u_exact(p) + grad_u_exact(p).transpose()));
  if (with_reg) G += regularizer(T, reg);
  return G;
}

Eigen::Vector2d u_linear(const Eigen::Vector2d& p) {
  return {p.x() * std::exp(p.y()), std::sin(p.x())};
}

Eigen::Matrix2d grad_u_linear(const Eigen::Vector2d& p) {
  Eigen::Matrix2d g;
  g(0, 0) = std::exp(p.y());
  g(0, 1) = p.x() * std::exp(p.y());
  g(1, 0) = std::cos(p.x());
  g(1, 1) = 0.0;
  return g;
}

SymTensor2 T_linear(const Eigen::Vector2d& p) {
  const Eigen::Matrix2d g = grad_u_linear(p);
  return SymTensor2::from_matrix(0.5 * (g + g.transpose()));
}

Eigen::Vector2d body_force_linear(const Eigen::Vector2d& p) {
  // T = eps(u) with u = (x e^y, sin x)
  return {-0.5 * p.x() * std::exp(p.y()), -0.5 * (std::exp(p.y()) - std::sin(p.x()))};
}

void verify_derivatives(const MaterialLaw& law, const RegularizationParams& reg, unsigned seed,
                        int samples) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(0.01, 0.99);
  const double step = 1e-6, tol = 1e-6;
  for (int k = 0; k < samples; ++k) {
    const Eigen::Vector2d p(dist(rng), dist(rng));
    // f = -div T by central differences of the stress columns
    for (auto [T, f] : {std::pair{&T_exact, &body_force}, std::pair{&T_linear, &body_force_linear}}) {
      Eigen::Vector2d div = Eigen::Vector2d::Zero();
      for (int j = 0; j < 2; ++j) {
        Eigen::Vector2d dp = Eigen::Vector2d::Zero();
        dp[j] = step;
        const SymTensor2 Tp = T(p + dp), Tm = T(p - dp);
        for (int i = 0; i < 2; ++i) div[i] += (Tp(i, j) - Tm(i, j)) / (2.0 * step);
      }
      if ((div + f(p)).norm() > tol)
        throw std::runtime_error("manufactured data: -div T != f at a sample point");
    }
    // strain by central differences of u, then G = A(T) (+ reg) - eps(u)
    Eigen::Matrix2d g_fd;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d dp = Eigen::Vector2d::Zero();
      dp[j] = step;
      const Eigen::Vector2d up = u_exact(p + dp), um = u_exact(p - dp);
      for (int i = 0; i < 2; ++i) g_fd(i, j) = (up[i] - um[i]) / (2.0 * step);
    }
    const SymTensor2 eps_fd = SymTensor2::from_matrix(0.5 * (g_fd + g_fd.transpose()));
    for (bool with_reg : {false, true}) {
      SymTensor2 ref = apply_A(T_exact(p), law) - eps_fd;
      if (with_reg) ref += regularizer(T_exact(p), reg);
      const SymTensor2 diff = ref - stress_source(p, law, reg, with_reg);
      if (frobenius_norm(diff) > tol)
        throw std::runtime_error("manufactured data: G mismatch at a sample point");
    }
  }
}

}  // namespace manufactured

namespace {

MaterialLaw law_by_name(const std::string& name) {
  if (name == "builtin") return builtin_law();
  throw std::invalid_argument("unknown law: " + name);
}

struct MeshAndSpaces {
  Mesh mesh;
  StressSpace space = StressSpace::P0;
  bool simplicial = false;
};

MeshAndSpaces build_square_mesh(int level, const std::string& stress_space) {
  MeshAndSpaces ms;
  ms.mesh = uniform_square_mesh(1 << level);
  if (stress_space == "P0") {
    ms.mesh = split_to_triangles(ms.mesh);
    ms.simplicial = true;
    ms.space = StressSpace::P0;
  } else if (stress_space == "Q0") {
    ms.space = StressSpace::P0;
  } else if (stress_space == "Q1disc") {
    ms.space = StressSpace::Q1Disc;
  } else {
    throw std::invalid_argument("unknown stress space: " + stress_space);
  }
  return ms;
}

std::string fmt6(double v) {
  if (std::isnan(v)) return "--";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void run_rows_parallel(int nrows, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || nrows <= 1) {
    for (int i = 0; i < nrows; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const int nw = std::min(threads, nrows);
  for (int w = 0; w < nw; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < nrows; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

Problem make_validation_problem(const Mesh& mesh, StressSpace space,
                                const RegularizationParams& reg, bool reg_in_G) {
  Problem p;
  p.spaces = make_spaces(mesh, space, {BoundaryTag::DirichletAll});
  p.law = builtin_law();
  p.reg = reg;
  p.body_force = manufactured::body_force;
  const MaterialLaw law = p.law;
  p.stress_source = [law, reg, reg_in_G](const Eigen::Vector2d& x) {
    return manufactured::stress_source(x, law, reg, reg_in_G);
  };
  p.dirichlet_g = manufactured::u_exact;
  return p;
}

Problem make_crack_problem(const Mesh& mesh, const RegularizationParams& reg, double f) {
  Problem p;
  p.spaces = make_spaces(mesh, StressSpace::P0, {BoundaryTag::IV});
  p.law = builtin_law();
  p.reg = reg;
  p.tractions[BoundaryTag::III] = [f](const Eigen::Vector2d&) {
    return Eigen::Vector2d(f, 0.0);
  };
  return p;
}

namespace {

RegularizationParams::Form form_by_name(const std::string& name) {
  if (name == "auto") return RegularizationParams::Form::Auto;
  if (name == "split") return RegularizationParams::Form::Split;
  throw std::invalid_argument("unknown reg_form: " + name);
}

}  // namespace

ValidateResult run_validate(const ExperimentConfig& cfg) {
  const RegularizationParams reg{cfg.n, cfg.t, form_by_name(cfg.reg_form)};
  manufactured::verify_derivatives(law_by_name(cfg.law), reg);
  ValidateResult result;
  result.rows.resize(cfg.levels.size());
  run_rows_parallel(static_cast<int>(cfg.levels.size()), cfg.threads, [&](int i) {
    const int level = cfg.levels[i];
    const double p = cfg.t == 1.0 ? 2.0 : 1.0;
    ValidateRow row;
    row.h = std::pow(2.0, -level);

    const MeshAndSpaces ms = build_square_mesh(level, cfg.stress_space);
    if (ms.space != StressSpace::Q1Disc) {
      const Problem prob = make_validation_problem(ms.mesh, ms.space, reg, true);
      SolverConfig scfg;
      scfg.tau = cfg.tau;
      scfg.tol = cfg.tol;
      DecoupledSolver solver(prob, scfg);
      const IterationState st = solver.run();
      const ErrorNorms en =
          error_norms(prob.spaces, st.u, st.T, manufactured::u_exact,
                      manufactured::grad_u_exact, manufactured::T_exact, p);
      row.e_u = en.e_u;
      row.e_T = en.e_T_comp;
      row.iterations = st.iterations;
      row.quotient = st.final_quotient;
      row.converged = st.converged;
    }
    // stress error reported from the inf-sup stable pair on the quad mesh
    if (ms.mesh.kind == Mesh::CellKind::Quad || ms.simplicial) {
      const Mesh quad_mesh = uniform_square_mesh(1 << level);
      const Problem sp_prob =
          make_validation_problem(quad_mesh, StressSpace::Q1Disc, reg, true);
      const StablePairResult spr = solve_stable_pair(sp_prob);
      const ErrorNorms en =
          error_norms(sp_prob.spaces, spr.u, spr.T, manufactured::u_exact,
                      manufactured::grad_u_exact, manufactured::T_exact, p);
      row.e_T = en.e_T_comp;
      const StressField PT = project_P0(sp_prob.spaces, manufactured::T_exact);
      StressField diff;
      diff.coeffs = spr.T.coeffs - PT.coeffs;
      row.modular = modular_phi_n(sp_prob.spaces, diff, cfg.n);
      if (ms.space == StressSpace::Q1Disc) {
        row.e_u = en.e_u;
        row.iterations = spr.iterations;
        row.converged = spr.converged;
      } else {
        row.converged = row.converged && spr.converged;
      }
    }
    result.rows[i] = row;
  });
  std::vector<double> eu, eT;
  for (const auto& r : result.rows) {
    eu.push_back(r.e_u);
    eT.push_back(r.e_T);
  }
  result.eoc_u = eoc_column(eu);
  result.eoc_T = eoc_column(eT);
  return result;
}

std::vector<NSweepRow> run_n_sweep(const ExperimentConfig& cfg) {
  const RegularizationParams::Form form = form_by_name(cfg.reg_form);
  manufactured::verify_derivatives(law_by_name(cfg.law), {cfg.n, cfg.t, form});
  struct Case {
    std::string mode;
    double n, t;
  };
  std::vector<Case> cases;
  for (double n : cfg.n_list) cases.push_back({"t=1", n, 1.0});
  for (double n : cfg.n_list) cases.push_back({"t=n", n, n});
  std::vector<NSweepRow> rows(cases.size());
  run_rows_parallel(static_cast<int>(cases.size()), cfg.threads, [&](int i) {
    const auto& c = cases[i];
    const RegularizationParams reg{c.n, c.t, form};
    const double p = c.t == 1.0 ? 2.0 : 1.0;
    NSweepRow row;
    row.t_mode = c.mode;
    row.n = c.n;

    const MeshAndSpaces ms = build_square_mesh(cfg.sweep_level, cfg.stress_space);
    if (ms.space != StressSpace::Q1Disc) {
      const Problem prob = make_validation_problem(ms.mesh, ms.space, reg, false);
      SolverConfig scfg;
      scfg.tau = cfg.tau;
      scfg.tol = cfg.tol;
      DecoupledSolver solver(prob, scfg);
      const IterationState st = solver.run();
      const ErrorNorms en =
          error_norms(prob.spaces, st.u, st.T, manufactured::u_exact,
                      manufactured::grad_u_exact, manufactured::T_exact, p);
      row.e_u = en.e_u;
      row.e_T = c.t == 1.0 ? en.e_T_comp : en.e_T_comp_l1;
      row.iterations = st.iterations;
      row.quotient = st.final_quotient;
      row.converged = st.converged;
    }
    {
      const Mesh quad_mesh = uniform_square_mesh(1 << cfg.sweep_level);
      const Problem sp_prob =
          make_validation_problem(quad_mesh, StressSpace::Q1Disc, reg, false);
      const StablePairResult spr = solve_stable_pair(sp_prob);
      const ErrorNorms en =
          error_norms(sp_prob.spaces, spr.u, spr.T, manufactured::u_exact,
                      manufactured::grad_u_exact, manufactured::T_exact, p);
      row.e_T = c.t == 1.0 ? en.e_T_comp : en.e_T_comp_l1;
      if (ms.space == StressSpace::Q1Disc) {
        row.e_u = en.e_u;
        row.iterations = spr.iterations;
        row.converged = spr.converged;
      } else {
        row.converged = row.converged && spr.converged;
      }
    }
    rows[i] = row;
  });
  return rows;
}

std::vector<CrackRow> run_crack(const ExperimentConfig& cfg) {
  const Mesh mesh = crack_mesh(cfg.crack_level);
  std::vector<CrackRow> rows(cfg.f_list.size());
  std::vector<DisplacementField> fields(cfg.f_list.size());
  std::vector<StressField> stresses(cfg.f_list.size());
  run_rows_parallel(static_cast<int>(cfg.f_list.size()), cfg.threads, [&](int i) {
    const double f = cfg.f_list[i];
    const RegularizationParams reg{cfg.n, cfg.t, form_by_name(cfg.reg_form)};
    const Problem prob = make_crack_problem(mesh, reg, f);
    SolverConfig scfg;
    scfg.tau = cfg.tau;
    scfg.tol = cfg.tol;
    DecoupledSolver solver(prob, scfg);
    const IterationState st = solver.run();
    const ErrorNorms en = error_norms(prob.spaces, st.u, st.T, nullptr, nullptr, nullptr, 2.0);
    CrackRow row;
    row.f = f;
    row.linf_grad_u = en.linf_grad_u;
    row.linf_T = en.linf_T;
    row.iterations = st.iterations;
    row.quotient = st.final_quotient;
    row.converged = st.converged;
    rows[i] = row;
    fields[i] = st.u;
    stresses[i] = st.T;
  });
  if (cfg.write_vtk_fields && !cfg.out_dir.empty()) {
    const FunctionSpaces sp = make_spaces(mesh, StressSpace::P0, {BoundaryTag::IV});
    for (std::size_t i = 0; i < cfg.f_list.size(); ++i) {
      VtkField umag{"u_mag", 1, {}};
      VtkField uvec{"u", 3, {}};
      for (int node = 0; node < sp.n_nodes(); ++node) {
        const double ux = fields[i].values[2 * node], uy = fields[i].values[2 * node + 1];
        umag.data.push_back(std::hypot(ux, uy));
        uvec.data.insert(uvec.data.end(), {ux, uy, 0.0});
      }
      VtkField tmag{"stress_mag", 1, {}};
      for (int cell = 0; cell < sp.n_cells(); ++cell)
        tmag.data.push_back(frobenius_norm(stresses[i].at(sp, cell, 0)));
      std::ostringstream name;
      name << cfg.out_dir << "/crack_f" << fmt6(cfg.f_list[i]) << ".vtk";
      write_vtk_file(mesh, {umag, uvec}, {tmag}, name.str(), "crack");
    }
  }
  return rows;
}

InfsupResult run_infsup(const ExperimentConfig& cfg) {
  manufactured::verify_derivatives(law_by_name(cfg.law), {cfg.n, cfg.t});
  InfsupResult result;
  result.rows.resize(cfg.levels.size());
  run_rows_parallel(static_cast<int>(cfg.levels.size()), cfg.threads, [&](int i) {
    const int level = cfg.levels[i];
    const Mesh mesh = uniform_square_mesh(1 << level);
    const FunctionSpaces sp_q0 = make_spaces(mesh, StressSpace::P0, {BoundaryTag::DirichletAll});
    const auto res_q0 =
        solve_linear_identity(sp_q0, manufactured::body_force_linear, manufactured::u_linear);
    const ErrorNorms en = error_norms(sp_q0, res_q0.u, res_q0.T, manufactured::u_linear,
                                      manufactured::grad_u_linear, manufactured::T_linear, 1.0);
    const FunctionSpaces sp_q1 =
        make_spaces(mesh, StressSpace::Q1Disc, {BoundaryTag::DirichletAll});
    const auto res_q1 =
        solve_linear_identity(sp_q1, manufactured::body_force_linear, manufactured::u_linear);
    DisplacementField du;
    du.values = res_q0.u.values - res_q1.u.values;
    InfsupRow row;
    row.h = std::pow(2.0, -level);
    row.e_u = en.e_u;
    row.u_l2 = en.u_l2;
    row.e_T_l1 = en.e_T;
    row.swap_grad_diff = grad_l2_norm(sp_q0, du);
    result.rows[i] = row;
  });
  std::vector<double> eu, eT;
  for (const auto& r : result.rows) {
    eu.push_back(r.e_u);
    eT.push_back(r.e_T_l1);
  }
  result.eoc_u = eoc_column(eu);
  result.eoc_T = eoc_column(eT);
  return result;
}

CheckerboardResult run_checkerboard(const ExperimentConfig& cfg) {
  CheckerboardResult result;
  for (double n : cfg.cb_n_list) {
    const CheckerboardStudy study = checkerboard_decay_study(cfg.N_list, n);
    result.reports.insert(result.reports.end(), study.reports.begin(), study.reports.end());
    result.fitted_exponents.push_back(study.fitted_exponent);
  }
  return result;
}

void write_validate_csv(const ValidateResult& r, std::ostream& os) {
  os << "h,e_u,e_T,EOC_u,EOC_T,modular,iterations,stopping_quotient,converged\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    os << fmt6(row.h) << ',' << fmt6(row.e_u) << ',' << fmt6(row.e_T) << ','
       << fmt6(r.eoc_u[i]) << ',' << fmt6(r.eoc_T[i]) << ',' << fmt6(row.modular) << ','
       << row.iterations << ',' << fmt6(row.quotient) << ',' << (row.converged ? 1 : 0) << '\n';
  }
}

void write_n_sweep_csv(const std::vector<NSweepRow>& rows, std::ostream& os) {
  os << "t_mode,n,e_u,e_T,iterations,stopping_quotient,converged\n";
  for (const auto& row : rows)
    os << row.t_mode << ',' << fmt6(row.n) << ',' << fmt6(row.e_u) << ',' << fmt6(row.e_T)
       << ',' << row.iterations << ',' << fmt6(row.quotient) << ',' << (row.converged ? 1 : 0)
       << '\n';
}

void write_crack_csv(const std::vector<CrackRow>& rows, std::ostream& os) {
  os << "f,linf_grad_u,linf_T,iterations,stopping_quotient,converged\n";
  for (const auto& row : rows)
    os << fmt6(row.f) << ',' << fmt6(row.linf_grad_u) << ',' << fmt6(row.linf_T) << ','
       << row.iterations << ',' << fmt6(row.quotient) << ',' << (row.converged ? 1 : 0) << '\n';
}

void write_infsup_csv(const InfsupResult& r, std::ostream& os) {
  os << "h,e_u_grad,u_l2,e_T_l1,EOC_u,EOC_T,swap_grad_diff\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    os << fmt6(row.h) << ',' << fmt6(row.e_u) << ',' << fmt6(row.u_l2) << ','
       << fmt6(row.e_T_l1) << ',' << fmt6(r.eoc_u[i]) << ',' << fmt6(r.eoc_T[i]) << ','
       << fmt6(row.swap_grad_diff) << '\n';
  }
}

void write_checkerboard_csv(const CheckerboardResult& r, std::ostream& os) {
  os << "pair,n,h,ratio\n";
  for (const auto& rep : r.reports)
    os << rep.pair << ',' << fmt6(rep.n) << ',' << fmt6(rep.h) << ',' << fmt6(rep.ratio) << '\n';
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(static_cast<T>(std::stod(trim(item))));
  }
  return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "n") cfg.n = std::stod(value);
  else if (key == "t") cfg.t = std::stod(value);
  else if (key == "tau") cfg.tau = std::stod(value);
  else if (key == "tol") cfg.tol = std::stod(value);
  else if (key == "levels") cfg.levels = parse_list<int>(value);
  else if (key == "n_list") cfg.n_list = parse_list<double>(value);
  else if (key == "f_list") cfg.f_list = parse_list<double>(value);
  else if (key == "N_list") cfg.N_list = parse_list<int>(value);
  else if (key == "cb_n_list") cfg.cb_n_list = parse_list<double>(value);
  else if (key == "crack_level") cfg.crack_level = std::stoi(value);
  else if (key == "sweep_level") cfg.sweep_level = std::stoi(value);
  else if (key == "stress_space") cfg.stress_space = value;
  else if (key == "reg_form") cfg.reg_form = value;
  else if (key == "law") cfg.law = value;
  else if (key == "threads") cfg.threads = std::stoi(value);
  else if (key == "write_vtk") cfg.write_vtk_fields = std::stoi(value) != 0;
  else throw std::invalid_argument("unknown config key: " + key);
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path, const std::string& section,
                                   ExperimentConfig cfg) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  cfg.experiment = section;
  std::string line, current;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      current = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config line without '=': " + line);
    // keys outside any section apply to every experiment; section keys only
    // to the matching one
    if (!current.empty() && current != section) continue;
    apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

bool run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
  auto open = [&](const std::string& name) {
    std::ofstream os(cfg.out_dir.empty() ? name : cfg.out_dir + "/" + name);
    if (!os) throw std::runtime_error("cannot open output file " + name);
    return os;
  };
  bool ok = true;
  if (cfg.experiment == "validate") {
    const ValidateResult r = run_validate(cfg);
    auto os = open("validate.csv");
    write_validate_csv(r, os);
    for (const auto& row : r.rows) ok = ok && row.converged;
  } else if (cfg.experiment == "n-sweep") {
    const auto rows = run_n_sweep(cfg);
    auto os = open("n_sweep.csv");
    write_n_sweep_csv(rows, os);
    for (const auto& row : rows) ok = ok && row.converged;
  } else if (cfg.experiment == "crack") {
    const auto rows = run_crack(cfg);
    auto os = open("crack.csv");
    write_crack_csv(rows, os);
    for (const auto& row : rows) ok = ok && row.converged;
  } else if (cfg.experiment == "infsup") {
    const InfsupResult r = run_infsup(cfg);
    auto os = open("infsup.csv");
    write_infsup_csv(r, os);
  } else if (cfg.experiment == "checkerboard") {
    const CheckerboardResult r = run_checkerboard(cfg);
    auto os = open("checkerboard.csv");
    write_checkerboard_csv(r, os);
  } else {
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);
  }
  return ok;
}

}  // namespace slfem
