#include <doctest.h>

#include <cmath>
#include <random>

#include "slfem/diagnostics.hpp"
#include "slfem/mesh.hpp"

using namespace slfem;

namespace {

DisplacementField random_interior_field(const FunctionSpaces& sp, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  DisplacementField v = make_displacement(sp);
  for (int node = 0; node < sp.n_nodes(); ++node) {
    if (sp.node_constrained[node]) continue;
    v.values[2 * node] = d(rng);
    v.values[2 * node + 1] = d(rng);
  }
  return v;
}

}  // namespace

TEST_CASE("simplicial P0/P1 supremizer ratio is exactly one") {
  for (int N : {4, 8, 16}) {
    const Mesh m = split_to_triangles(uniform_square_mesh(N));
    const FunctionSpaces sp = make_spaces(m, StressSpace::P0, {BoundaryTag::DirichletAll});
    for (int k = 0; k < 20; ++k) {
      for (double n : {1.0, 2.0}) {
        const double ratio = supremizer_ratio(sp, random_interior_field(sp, 100 * N + k), n);
        CHECK(ratio == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("Q0/Q1 supremizer saturates for cellwise-constant strain") {
  const Mesh m = uniform_square_mesh(6);
  const FunctionSpaces sp = make_spaces(m, StressSpace::P0, {});
  DisplacementField v = make_displacement(sp);
  for (int node = 0; node < sp.n_nodes(); ++node) {
    const auto& p = m.nodes[node];
    v.values[2 * node] = 0.5 * p.x() + 0.1 * p.y();
    v.values[2 * node + 1] = -0.2 * p.x() + 0.3 * p.y();
  }
  CHECK(supremizer_ratio(sp, v, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(supremizer_ratio(sp, v, 2.0) == doctest::Approx(1.0).epsilon(1e-12));

  const DisplacementField zero = make_displacement(sp);
  CHECK_THROWS_AS(supremizer_ratio(sp, zero, 1.0), std::invalid_argument);
}

TEST_CASE("checkerboard mode construction") {
  {
    const Mesh m = checkerboard_partition(1);
    const FunctionSpaces sp = make_spaces(m, StressSpace::P0, {BoundaryTag::DirichletAll});
    const DisplacementField v = checkerboard_mode(sp);
    const int node = m.node_index(1, 1);
    CHECK(v.values[2 * node] == -1.0);  // i = j = 1, even sum
    CHECK(v.values[2 * node + 1] == -1.0);
  }
  const Mesh m = checkerboard_partition(7);
  const FunctionSpaces sp = make_spaces(m, StressSpace::P0, {BoundaryTag::DirichletAll});
  const DisplacementField v = checkerboard_mode(sp);
  const auto mask = boundary_cell_mask(m);
  const double h = 1.0 / 8.0;
  double cmin = 1e30, cmax = 0;
  for (int cell = 0; cell < sp.n_cells(); ++cell) {
    const double a = frobenius_norm(cell_strain_average_integral(sp, v, cell));
    if (mask[cell]) {
      cmin = std::min(cmin, a / h);
      cmax = std::max(cmax, a / h);
    } else {
      CHECK(a < 1e-13);  // interior annihilation
    }
  }
  // boundary cells scale like h with h-independent constants
  CHECK(cmin > 0.1);
  CHECK(cmax < 10.0);
  MESSAGE("boundary-cell strain integral / h in [", cmin, ", ", cmax, "]");
}

TEST_CASE("checkerboard quotient decays like h^(1/(n+1))") {
  for (double n : {1.0, 2.0}) {
    const CheckerboardStudy study = checkerboard_decay_study({7, 15, 31, 63}, n);
    REQUIRE(study.reports.size() == 4);
    for (std::size_t i = 1; i < study.reports.size(); ++i)
      CHECK(study.reports[i].ratio < study.reports[i - 1].ratio);  // strict decay
    CHECK(std::abs(study.fitted_exponent - 1.0 / (n + 1.0)) <= 0.15);
  }
}

TEST_CASE("structured Q0/Q1 ratios stay positive for random fields") {
  for (int N : {4, 8}) {
    const Mesh m = uniform_square_mesh(N);
    const FunctionSpaces sp = make_spaces(m, StressSpace::P0, {BoundaryTag::DirichletAll});
    double min_ratio = 1e30;
    for (int k = 0; k < 10; ++k)
      min_ratio = std::min(min_ratio, supremizer_ratio(sp, random_interior_field(sp, 7 * N + k), 1.0));
    CHECK(min_ratio > 0.0);
  }
}

TEST_CASE("EOC helpers") {
  CHECK(eoc(0.2, 0.1) == doctest::Approx(1.0));
  CHECK(std::isnan(eoc(1e-14, 1e-15)));
  const std::vector<double> eocs = eoc_column({0.4, 0.2, 0.1});
  CHECK(std::isnan(eocs[0]));
  CHECK(eocs[1] == doctest::Approx(1.0));
  CHECK(eocs[2] == doctest::Approx(1.0));
  CHECK(loglog_slope({1.0, 0.5, 0.25}, {2.0, 1.0, 0.5}) == doctest::Approx(1.0).epsilon(1e-12));
}
