#include "slfem/material.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slfem {

MaterialLaw builtin_law() {
  MaterialLaw law;
  law.lambda = [](double s) { return 1.0 / std::sqrt(1.0 + s * s); };
  law.mu = law.lambda;
  // d/ds [ s (1+s^2)^{-1/2} ] = (1+s^2)^{-3/2}
  law.dlambda_s = [](double s) { return std::pow(1.0 + s * s, -1.5); };
  law.dmu_s = law.dlambda_s;
  law.C1 = 1.0;
  law.C2 = 1.0;
  law.kappa = 1.0;
  law.alpha = 2.0;
  return law;
}

MaterialLaw constant_law(double lambda0, double mu0) {
  MaterialLaw law;
  law.lambda = [lambda0](double) { return lambda0; };
  law.mu = [mu0](double) { return mu0; };
  law.dlambda_s = [lambda0](double) { return lambda0; };
  law.dmu_s = [mu0](double) { return mu0; };
  return law;
}

double solve_radial(const std::function<double(double)>& g,
                    const std::function<double(double)>& dg, double target, double lo,
                    double hi, double tol) {
  auto f = [&](double x) {
    const double v = g(x) - target;
    if (!std::isfinite(v)) throw std::runtime_error("solve_radial: non-finite evaluation");
    return v;
  };
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa > 0.0 || fb < 0.0)
    throw std::invalid_argument("solve_radial: bracket does not straddle target");
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;

  double x = 0.5 * (a + b);
  if (dg) {
    // seed closer to the root when the slope permits
    const double d0 = dg(0.5 * (a + b));
    if (std::isfinite(d0) && d0 > 0.0) x = std::clamp(0.5 * (a + b) - f(0.5 * (a + b)) / d0, a, b);
  }
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      b = x;
    } else {
      a = x;
    }
    const double width = b - a;
    if (width <= std::max(tol, 4.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(std::abs(a), std::abs(b))))
      return 0.5 * (a + b);
    double next = 0.5 * (a + b);
    if (dg) {
      const double d = dg(x);
      if (std::isfinite(d) && d > 0.0) {
        const double newton = x - fx / d;
        if (newton > a && newton < b) next = newton;
      }
    }
    x = next;
  }
  return 0.5 * (a + b);
}

namespace {

// Expands [lo, hi] around the seed until g straddles the target; g strictly
// increasing.
void expand_bracket(const std::function<double(double)>& g, double target, double& lo,
                    double& hi) {
  double step = std::max(1.0, 0.1 * (std::abs(lo) + std::abs(hi)));
  for (int it = 0; it < 200 && g(lo) > target; ++it) {
    lo -= step;
    step *= 2.0;
  }
  step = std::max(1.0, 0.1 * (std::abs(lo) + std::abs(hi)));
  for (int it = 0; it < 200 && g(hi) < target; ++it) {
    hi += step;
    step *= 2.0;
  }
}

}  // namespace

template <int Dim>
SymTensor<Dim> solve_local_step1(const SymTensor<Dim>& T_prev, const SymTensor<Dim>& R_hat,
                                 double tau, const MaterialLaw& law) {
  if (!(tau > 0.0)) throw std::invalid_argument("solve_local_step1: tau must be positive");
  const double inv_tau = 1.0 / tau;
  const double d = static_cast<double>(Dim);

  // trace equation: s/tau + d lambda(s) s = tr R_hat, monotone by (A3)
  const double theta = trace(R_hat);
  auto g_tr = [&](double s) { return inv_tau * s + d * law.lambda(s) * s; };
  std::function<double(double)> dg_tr;
  if (law.dlambda_s)
    dg_tr = [&law, inv_tau, d](double s) { return inv_tau + d * law.dlambda_s(s); };
  double lo = std::min(0.0, tau * theta) - 1.0;
  double hi = std::max(0.0, tau * theta) + 1.0;
  expand_bracket(g_tr, theta, lo, hi);
  const double s = solve_radial(g_tr, dg_tr, theta, lo, hi);

  // radial deviatoric equation: rho/tau + mu(rho) rho = |R_hat^d|; the map is
  // radial, so the deviatoric direction of R_hat is preserved.
  const SymTensor<Dim> dev_R = deviatoric(R_hat);
  const double r = frobenius_norm(dev_R);
  SymTensor<Dim> T;
  for (int i = 0; i < Dim; ++i) T[i] = s / d;
  if (r > 0.0) {
    auto g_dev = [&](double rho) { return inv_tau * rho + law.mu(rho) * rho; };
    std::function<double(double)> dg_dev;
    if (law.dmu_s) dg_dev = [&law, inv_tau](double rho) { return inv_tau + law.dmu_s(rho); };
    double dlo = 0.0, dhi = tau * r * (1.0 + 1e-12) + 1e-30;
    expand_bracket(g_dev, r, dlo, dhi);
    const double rho = solve_radial(g_dev, dg_dev, r, dlo, dhi);
    T += dev_R * (rho / r);
  }
  (void)T_prev;

  const SymTensor<Dim> residual = T * inv_tau + apply_A(T, law) - R_hat;
  const double res = frobenius_norm(residual);
  if (!(res <= 1e-11 * (1.0 + frobenius_norm(R_hat))))
    throw std::runtime_error("solve_local_step1: residual too large (law violating (A3)/(A4)?)");
  return T;
}

template SymTensor<2> solve_local_step1<2>(const SymTensor<2>&, const SymTensor<2>&, double,
                                           const MaterialLaw&);
template SymTensor<3> solve_local_step1<3>(const SymTensor<3>&, const SymTensor<3>&, double,
                                           const MaterialLaw&);

}  // namespace slfem
