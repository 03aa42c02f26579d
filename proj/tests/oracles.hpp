#pragma once

// Independent reference computations for the test suites. Everything here is
// deliberately brute force and shares no code path with the library
// implementations it checks.

#include <functional>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "slfem/material.hpp"
#include "slfem/tensor.hpp"

namespace oracles {

// Plain bisection to absolute tolerance.
inline double bisect(const std::function<double(double)>& g, double target, double lo,
                     double hi, double tol = 1e-12) {
  double flo = g(lo) - target, fhi = g(hi) - target;
  if (flo > 0 || fhi < 0) throw std::invalid_argument("bisect: bad bracket");
  for (int it = 0; it < 300 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = g(mid) - target;
    if (fm >= 0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline slfem::SymTensor2 random_sym2(std::mt19937& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return slfem::SymTensor2({d(rng), d(rng), d(rng)});
}

inline slfem::SymTensor3 random_sym3(std::mt19937& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return slfem::SymTensor3({d(rng), d(rng), d(rng), d(rng), d(rng), d(rng)});
}

// Dense-matrix contraction sum_{ij} S_ij R_ij.
template <int Dim>
double dense_contract(const slfem::SymTensor<Dim>& S, const slfem::SymTensor<Dim>& R) {
  const auto ms = S.to_matrix();
  const auto mr = R.to_matrix();
  double acc = 0;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) acc += ms(i, j) * mr(i, j);
  return acc;
}

// Dense evaluation of A(S) = lambda(tr S) tr S I + mu(|S^d|) S^d.
inline Eigen::Matrix2d dense_apply_A(const slfem::SymTensor2& S, const slfem::MaterialLaw& law) {
  const Eigen::Matrix2d m = S.to_matrix();
  const double tr = m.trace();
  const Eigen::Matrix2d dev = m - 0.5 * tr * Eigen::Matrix2d::Identity();
  const double rho = dev.norm();
  Eigen::Matrix2d out = law.lambda(tr) * tr * Eigen::Matrix2d::Identity();
  if (rho > 0) out += law.mu(rho) * dev;
  return out;
}

// Damped Newton with finite-difference Jacobian on the full 3-unknown system
// (1/tau) T + A(T) = R_hat; independent of the trace/deviatoric decoupling.
inline slfem::SymTensor2 newton_local_step1(const slfem::SymTensor2& R_hat, double tau,
                                            const slfem::MaterialLaw& law,
                                            double tol = 1e-13) {
  using slfem::SymTensor2;
  auto residual = [&](const SymTensor2& T) {
    Eigen::Vector3d r;
    const Eigen::Matrix2d F =
        T.to_matrix() / tau + dense_apply_A(T, law) - R_hat.to_matrix();
    r << F(0, 0), F(1, 1), F(0, 1);
    return r;
  };
  SymTensor2 T;  // start from zero
  for (int it = 0; it < 400; ++it) {
    const Eigen::Vector3d r = residual(T);
    if (r.norm() < tol) break;
    Eigen::Matrix3d J;
    const double h = 1e-7;
    for (int k = 0; k < 3; ++k) {
      SymTensor2 Tp = T, Tm = T;
      Tp[k] += h;
      Tm[k] -= h;
      J.col(k) = (residual(Tp) - residual(Tm)) / (2 * h);
    }
    const Eigen::Vector3d step = J.fullPivLu().solve(r);
    double alpha = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      SymTensor2 Tn = T;
      for (int k = 0; k < 3; ++k) Tn[k] -= alpha * step[k];
      if (residual(Tn).norm() < r.norm()) {
        T = Tn;
        break;
      }
      alpha *= 0.5;
    }
  }
  return T;
}

}  // namespace oracles
