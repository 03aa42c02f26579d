#pragma once

#include <array>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>

namespace slfem {

// Symmetric d x d tensor value with upper-triangle storage.
// Component order: 2D (xx, yy, xy); 3D (xx, yy, zz, xy, xz, yz).
// Off-diagonal components are stored once and counted twice in contractions.
template <int Dim, typename Scalar = double>
class SymTensor {
  static_assert(Dim == 2 || Dim == 3, "SymTensor supports d in {2,3} only");

public:
  static constexpr int dim = Dim;
  static constexpr int ncomp = Dim * (Dim + 1) / 2;

  constexpr SymTensor() : comp_{} {}
  explicit constexpr SymTensor(const std::array<Scalar, ncomp>& c) : comp_(c) {}

  static constexpr SymTensor zero() { return SymTensor(); }

  static constexpr SymTensor identity() {
    SymTensor t;
    for (int i = 0; i < Dim; ++i) t.comp_[i] = Scalar(1);
    return t;
  }

  // Diagonal tensor; ignores entries beyond Dim.
  static constexpr SymTensor diagonal(Scalar a, Scalar b, Scalar c = Scalar(0)) {
    SymTensor t;
    t.comp_[0] = a;
    t.comp_[1] = b;
    if constexpr (Dim == 3) t.comp_[2] = c;
    return t;
  }

  constexpr Scalar operator[](int k) const { return comp_[k]; }
  constexpr Scalar& operator[](int k) { return comp_[k]; }

  // Full-index access through the symmetric storage.
  constexpr Scalar operator()(int i, int j) const { return comp_[flat_index(i, j)]; }
  constexpr Scalar& at(int i, int j) { return comp_[flat_index(i, j)]; }

  constexpr SymTensor& operator+=(const SymTensor& o) {
    for (int k = 0; k < ncomp; ++k) comp_[k] += o.comp_[k];
    return *this;
  }
  constexpr SymTensor& operator-=(const SymTensor& o) {
    for (int k = 0; k < ncomp; ++k) comp_[k] -= o.comp_[k];
    return *this;
  }
  constexpr SymTensor& operator*=(Scalar a) {
    for (int k = 0; k < ncomp; ++k) comp_[k] *= a;
    return *this;
  }
  constexpr SymTensor& operator/=(Scalar a) { return (*this) *= (Scalar(1) / a); }

  friend constexpr SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend constexpr SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend constexpr SymTensor operator*(SymTensor a, Scalar s) { return a *= s; }
  friend constexpr SymTensor operator*(Scalar s, SymTensor a) { return a *= s; }
  friend constexpr SymTensor operator/(SymTensor a, Scalar s) { return a /= s; }
  friend constexpr SymTensor operator-(SymTensor a) { return a *= Scalar(-1); }

  Eigen::Matrix<Scalar, Dim, Dim> to_matrix() const {
    Eigen::Matrix<Scalar, Dim, Dim> m;
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  // Symmetrizes nonsymmetric input.
  static SymTensor from_matrix(const Eigen::Matrix<Scalar, Dim, Dim>& m) {
    SymTensor t;
    for (int i = 0; i < Dim; ++i)
      for (int j = i; j < Dim; ++j) t.at(i, j) = (m(i, j) + m(j, i)) / Scalar(2);
    return t;
  }

private:
  static constexpr int flat_index(int i, int j) {
    if (i == j) return i;
    const int a = i < j ? i : j;
    const int b = i < j ? j : i;
    if constexpr (Dim == 2) {
      return 2;  // (0,1)
    } else {
      // (0,1)->3, (0,2)->4, (1,2)->5
      return a == 0 ? (b == 1 ? 3 : 4) : 5;
    }
  }

  std::array<Scalar, ncomp> comp_;
};

template <int Dim, typename Scalar>
constexpr Scalar trace(const SymTensor<Dim, Scalar>& s) {
  Scalar t = s[0] + s[1];
  if constexpr (Dim == 3) t += s[2];
  return t;
}

// Contraction S : R with off-diagonal entries counted twice.
template <int Dim, typename Scalar>
constexpr Scalar contract(const SymTensor<Dim, Scalar>& s, const SymTensor<Dim, Scalar>& r) {
  Scalar acc = Scalar(0);
  for (int k = 0; k < Dim; ++k) acc += s[k] * r[k];
  for (int k = Dim; k < SymTensor<Dim, Scalar>::ncomp; ++k) acc += Scalar(2) * s[k] * r[k];
  return acc;
}

template <int Dim, typename Scalar>
constexpr SymTensor<Dim, Scalar> deviatoric(const SymTensor<Dim, Scalar>& s) {
  SymTensor<Dim, Scalar> d = s;
  const Scalar m = trace(s) / Scalar(Dim);
  for (int i = 0; i < Dim; ++i) d[i] -= m;
  return d;
}

template <int Dim, typename Scalar>
Scalar frobenius_norm(const SymTensor<Dim, Scalar>& s) {
  using std::sqrt;
  return sqrt(contract(s, s));
}

template <int Dim, typename Scalar>
std::ostream& operator<<(std::ostream& os, const SymTensor<Dim, Scalar>& s) {
  os << '[';
  for (int k = 0; k < SymTensor<Dim, Scalar>::ncomp; ++k) os << (k ? ", " : "") << s[k];
  return os << ']';
}

using SymTensor2 = SymTensor<2>;
using SymTensor3 = SymTensor<3>;

}  // namespace slfem
