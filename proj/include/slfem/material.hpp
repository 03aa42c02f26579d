#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "slfem/tensor.hpp"

namespace slfem {

// Constitutive scalar functions lambda and mu together with the structure
// constants of the admissibility conditions they satisfy:
//   C1 s^2/(kappa+|s|) <= lambda(s) s^2 <= C2 |s|,
//   C1 s^2/(kappa+s)   <= mu(s) s^2    <= C2 s,
//   (lambda(s)s)' >= 0,   (mu(s)s)' >= C1/(kappa+s)^(alpha+1).
struct MaterialLaw {
  std::function<double(double)> lambda;  // lambda(s), s in R
  std::function<double(double)> mu;      // mu(s), s >= 0
  // Derivatives of s -> lambda(s)s and s -> mu(s)s, used by the local Newton
  // solves. May be empty; the scalar solver then falls back to bisection.
  std::function<double(double)> dlambda_s;
  std::function<double(double)> dmu_s;
  double C1 = 1.0;
  double C2 = 1.0;
  double kappa = 1.0;
  double alpha = 1.0;
};

// lambda(s) = mu(s) = (1+s^2)^{-1/2}. Satisfies the admissibility conditions
// with C1 = C2 = kappa = 1; the derivative bound holds with alpha = 2 since
// (mu(s)s)' = (1+s^2)^{-3/2} >= (1+s)^{-3} for s >= 0.
MaterialLaw builtin_law();

// Frozen-constant coefficients; violates the growth conditions and is meant
// for linear sanity checks only.
MaterialLaw constant_law(double lambda0, double mu0);

// Regularization strength n (the regularizer carries a 1/n factor) and
// power-law exponent t; t = 1 is the linear regularization, t = n the
// nonlinear one. `form` selects which of the two power-map layouts the
// iteration applies: Auto uses the linear map S/n at t = 1 and the radial
// full-tensor power map otherwise; Split always uses the trace/deviatoric
// split (which at t = 1 gives (tr S I + S^d)/n, not S/n).
struct RegularizationParams {
  double n = 1.0;
  double t = 1.0;
  enum class Form { Auto, Split } form = Form::Auto;
};

// x -> x |x|^(e-1) extended by 0 at x = 0 (continuous for e > 0).
inline double signed_power(double x, double e) {
  if (x == 0.0) return 0.0;
  return (x > 0 ? 1.0 : -1.0) * std::pow(std::abs(x), e);
}

// A(S) = lambda(tr S) tr S I + mu(|S^d|) S^d.
template <int Dim>
SymTensor<Dim> apply_A(const SymTensor<Dim>& S, const MaterialLaw& law) {
  const double s = trace(S);
  const SymTensor<Dim> dev = deviatoric(S);
  const double rho = frobenius_norm(dev);
  SymTensor<Dim> out = dev * (rho > 0 ? law.mu(rho) : 0.0);
  const double lt = law.lambda(s) * s;
  for (int i = 0; i < Dim; ++i) out[i] += lt;
  return out;
}

// Power-law regularizer in trace/deviatoric split form:
//   (1/n) [ tr S I / |tr S|^(1-1/t) + S^d / |S^d|^(1-1/t) ],
// with both power maps extended by 0 at vanishing argument.
template <int Dim>
SymTensor<Dim> apply_reg(const SymTensor<Dim>& S, const RegularizationParams& reg) {
  const double e = 1.0 / reg.t;
  const double s = trace(S);
  const SymTensor<Dim> dev = deviatoric(S);
  const double rho = frobenius_norm(dev);
  SymTensor<Dim> out;
  if (rho > 0.0) out = dev * (std::pow(rho, e - 1.0) / reg.n);
  const double tr_part = signed_power(s, e) / reg.n;
  for (int i = 0; i < Dim; ++i) out[i] += tr_part;
  return out;
}

// Radial power-law regularizer acting on the whole tensor,
//   (1/n) S / |S|^(1-1/t),
// extended by 0 at S = 0. Monotone by the same integral bound as the
// componentwise maps; coincides with S/n at t = 1.
template <int Dim>
SymTensor<Dim> apply_reg_radial(const SymTensor<Dim>& S, const RegularizationParams& reg) {
  const double norm = frobenius_norm(S);
  if (norm == 0.0) return SymTensor<Dim>::zero();
  return S * (std::pow(norm, 1.0 / reg.t - 1.0) / reg.n);
}

// Regularizer used by the iteration and the experiment drivers, dispatching
// on the configured form.
template <int Dim>
SymTensor<Dim> regularizer(const SymTensor<Dim>& S, const RegularizationParams& reg) {
  if (reg.form == RegularizationParams::Form::Split) return apply_reg(S, reg);
  if (reg.t == 1.0) return S / reg.n;
  return apply_reg_radial(S, reg);
}

template <int Dim>
SymTensor<Dim> apply_A_n(const SymTensor<Dim>& S, const MaterialLaw& law,
                         const RegularizationParams& reg) {
  return apply_A(S, law) + regularizer(S, reg);
}

// Root of g(x) = target for strictly increasing continuous g on [lo, hi].
// Safeguarded Newton (when dg is provided) with bisection fallback; absolute
// tolerance 1e-13 on the root. Throws std::invalid_argument when the bracket
// does not straddle the target and std::runtime_error on non-finite values.
double solve_radial(const std::function<double(double)>& g,
                    const std::function<double(double)>& dg, double target, double lo,
                    double hi, double tol = 1e-13);

// Unique solution T of (1/tau) T + A(T) = R_hat via the trace/deviatoric
// decoupling. T_prev seeds the scalar iterations. The assembled right-hand
// side R_hat is expected to already contain (1/tau) T_prev, the projected
// strain, any stress source and minus the regularizer of T_prev.
// Residual of the tensor equation is checked against 1e-11 (1 + |R_hat|).
template <int Dim>
SymTensor<Dim> solve_local_step1(const SymTensor<Dim>& T_prev, const SymTensor<Dim>& R_hat,
                                 double tau, const MaterialLaw& law);

extern template SymTensor<2> solve_local_step1<2>(const SymTensor<2>&, const SymTensor<2>&,
                                                  double, const MaterialLaw&);
extern template SymTensor<3> solve_local_step1<3>(const SymTensor<3>&, const SymTensor<3>&,
                                                  double, const MaterialLaw&);

}  // namespace slfem
