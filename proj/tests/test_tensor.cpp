#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "slfem/tensor.hpp"

using namespace slfem;

TEST_CASE("trace basics") {
  CHECK(trace(SymTensor2::identity()) == doctest::Approx(2.0));
  CHECK(trace(SymTensor2::zero()) == 0.0);
  // stress of the manufactured solution evaluated at the origin
  CHECK(trace(SymTensor2::diagonal(std::exp(0.0), std::cos(0.0))) == doctest::Approx(2.0));
  CHECK(trace(SymTensor3::identity()) == doctest::Approx(3.0));
}

TEST_CASE("deviatoric basics") {
  CHECK(frobenius_norm(deviatoric(SymTensor2::identity())) == doctest::Approx(0.0));
  CHECK(frobenius_norm(deviatoric(SymTensor3::identity())) == doctest::Approx(0.0));

  const SymTensor2 tracefree({1.5, -1.5, 0.7});
  const SymTensor2 d = deviatoric(tracefree);
  for (int k = 0; k < 3; ++k) CHECK(d[k] == doctest::Approx(tracefree[k]));

  const SymTensor2 s = SymTensor2::diagonal(2.0, 0.0);
  const SymTensor2 dev = deviatoric(s);
  CHECK(dev[0] == doctest::Approx(1.0));
  CHECK(dev[1] == doctest::Approx(-1.0));
  CHECK(dev[2] == doctest::Approx(0.0));
  // full-matrix check
  const Eigen::Matrix2d m = s.to_matrix();
  const Eigen::Matrix2d dm = m - 0.5 * m.trace() * Eigen::Matrix2d::Identity();
  CHECK((dev.to_matrix() - dm).norm() == doctest::Approx(0.0));

  std::mt19937 rng(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(trace(deviatoric(oracles::random_sym2(rng)))) < 1e-14);
    CHECK(std::abs(trace(deviatoric(oracles::random_sym3(rng)))) < 1e-14);
  }
}

TEST_CASE("contraction against dense oracle") {
  CHECK(contract(SymTensor2::identity(), SymTensor2::identity()) == doctest::Approx(2.0));
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    const SymTensor2 s = oracles::random_sym2(rng);
    const SymTensor2 r = oracles::random_sym2(rng);
    CHECK(contract(s, SymTensor2::identity()) == doctest::Approx(trace(s)).epsilon(1e-13));
    CHECK(contract(s, s) == doctest::Approx(oracles::dense_contract(s, s)).epsilon(1e-13));
    CHECK(contract(s, r) == doctest::Approx(oracles::dense_contract(s, r)).epsilon(1e-13));
    const SymTensor3 s3 = oracles::random_sym3(rng);
    CHECK(contract(s3, s3) == doctest::Approx(oracles::dense_contract(s3, s3)).epsilon(1e-13));
  }
}

TEST_CASE("frobenius norm") {
  CHECK(frobenius_norm(SymTensor2::identity()) == doctest::Approx(std::sqrt(2.0)));
  CHECK(frobenius_norm(SymTensor2::zero()) == 0.0);
}

template <int Dim>
static void check_norm_identities(unsigned seed) {
  std::mt19937 rng(seed);
  for (int i = 0; i < 1000; ++i) {
    SymTensor<Dim> s;
    if constexpr (Dim == 2)
      s = oracles::random_sym2(rng, 3.0);
    else
      s = oracles::random_sym3(rng, 3.0);
    const double ns = frobenius_norm(s);
    const double nd = frobenius_norm(deviatoric(s));
    const double tr = std::abs(trace(s));
    // |S|^2 = |S^d|^2 + (1/d)(tr S)^2
    CHECK(ns * ns ==
          doctest::Approx(nd * nd + tr * tr / Dim).epsilon(1e-14).scale(ns * ns + 1e-30));
    // |S| <= |S^d| + |tr S|
    CHECK(ns <= nd + tr + 1e-13);
    // |tr S| + |S^d| <= sqrt(2d) |S|
    CHECK(tr + nd <= std::sqrt(2.0 * Dim) * ns + 1e-13);
    // 2^{1-p} |S|^p <= |tr S|^p + |S^d|^p
    for (double p : {1.0, 1.5, 2.0, 3.0})
      CHECK(std::pow(2.0, 1.0 - p) * std::pow(ns, p) <=
            std::pow(tr, p) + std::pow(nd, p) + 1e-12);
  }
}

TEST_CASE("norm splitting identities, d=2 and d=3") {
  check_norm_identities<2>(21);
  check_norm_identities<3>(22);
}

TEST_CASE("power map is Hoelder continuous") {
  // |x|x|^{a-1} - y|y|^{a-1}| <= 2^{1-a} |x-y|^a for a in (0,1]
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  for (double a : {0.5, 1.0 / 3.0, 0.1}) {
    for (int i = 0; i < 1000; ++i) {
      double x = d(rng), y = d(rng);
      if (x == 0 || y == 0) continue;
      const double lhs = std::abs(signed_power(x, a) - signed_power(y, a));
      const double rhs = std::pow(2.0, 1.0 - a) * std::pow(std::abs(x - y), a);
      CHECK(lhs <= rhs * (1.0 + 1e-13) + 1e-15);
    }
  }
}
