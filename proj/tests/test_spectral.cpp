#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rwad/errors.hpp"
#include "rwad/model.hpp"
#include "rwad/propagate.hpp"
#include "rwad/spectral.hpp"
#include "support.hpp"

using namespace rwad;
using std::numbers::pi;

namespace {

HermitianFamily diagonal_family(std::function<double(double)> a, std::function<double(double)> b) {
  return [=](double tau) {
    RVec d(2);
    d << a(tau), b(tau);
    return HermitianMatrix::diagonal(d);
  };
}

HermitianFamily chirp_family() {
  std::vector<double> e{0, 1, 2.5, 3, 2.2, 5, 7};
  CMat h = CMat::Zero(7, 7);
  for (int j = 0; j < 6; ++j) h(j, j + 1) = h(j + 1, j) = 1.0;
  const SpectralGapStructure s = spectral_gaps(QuantumSystem(e, h));
  const ControlSchedule c = chirp_schedule(7, s, 4.0 * ScalarFn::sin_affine(pi), (-2.0 / pi) * ScalarFn::sin_affine(pi));
  return [s, c](double tau) { return hd_at(c.phases, c.envelopes, s, tau); };
}

std::vector<double> one_to(int m) {
  std::vector<double> d(m);
  for (int j = 0; j < m; ++j) d[j] = j + 1.0;
  return d;
}

// Sorted eigenvalues k-1 and k (0-based k-1, k) of H_S on the given axis, by Sturm bisection.
double oracle_gap(const std::vector<double>& d, Axis axis, double w, int k) {
  std::vector<double> off(d.size() - 1);
  for (std::size_t j = 0; j < off.size(); ++j) {
    const bool odd_link = j % 2 == 0;
    off[j] = axis == Axis::w1_zero ? (odd_link ? 0.0 : w) : (odd_link ? w : 0.0);
  }
  const std::vector<double> r = testing::tridiagonal_roots(d, off);
  return r[k] - r[k - 1];
}

}  // namespace

TEST_CASE("constant family gives constant paths") {
  auto g = testing::rng(1);
  const HermitianMatrix h(testing::random_hermitian(g, 4));
  const std::vector<double> grid = uniform_grid(33);
  const EigenPaths p = eigen_paths([&](double) { return h; }, grid);
  CHECK(p.certificate == doctest::Approx(1.0));
  CHECK(p.inserted == 0);
  for (std::size_t i = 1; i < p.size(); ++i) {
    CHECK((p.values[i] - p.values[0]).norm() < 1e-14);
    CHECK((p.frames[i] - p.frames[0]).norm() < 1e-12);
  }
}

TEST_CASE("seven-level chirp family: tracked eigenpairs, continuity, no interior contact") {
  const HermitianFamily f = chirp_family();
  const std::vector<double> grid = uniform_grid(257);
  const EigenPaths p = eigen_paths(f, grid);
  CHECK(p.certificate >= 0.9);
  double min_gap = 1e9;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const CMat& h = f(p.grid[i]).matrix();
    for (int j = 0; j < 7; ++j) {
      CHECK((h * p.frames[i].col(j) - p.values[i][j] * p.frames[i].col(j)).norm() < 1e-9);
      for (int l = j + 1; l < 7; ++l) min_gap = std::min(min_gap, std::abs(p.values[i][j] - p.values[i][l]));
    }
    if (i > 0)
      for (int j = 0; j < 7; ++j) CHECK(p.frames[i - 1].col(j).dot(p.frames[i].col(j)).real() >= 0.0);
  }
  CHECK(min_gap > 0.1);
  // u(0) = 0 but h_d(0) = diag(2, 4, ..., 14): the gaps stay open at the ends.
  const GapReport r = gap_condition(p, 0, 1e-3);
  CHECK(r.holds_gap);
  CHECK(r.gap_estimate == doctest::Approx(min_gap));
  CHECK(minimal_kappa(p, 1e-3) == 0);
}

TEST_CASE("gap condition on constant diag(0, 1)") {
  const EigenPaths p = eigen_paths(diagonal_family([](double) { return 0.0; }, [](double) { return 1.0; }),
                                   uniform_grid(17));
  const GapReport r = gap_condition(p, 0, 0.5);
  CHECK(r.holds_gap);
  CHECK(r.gap_estimate == doctest::Approx(1.0));
  CHECK(r.holds_kappa_gap);
}

TEST_CASE("transverse crossing satisfies 1-GAP only") {
  const EigenPaths p = eigen_paths(diagonal_family([](double t) { return t - 0.5; }, [](double t) { return 0.5 - t; }),
                                   uniform_grid(101));
  const GapReport g0 = gap_condition(p, 0, 1e-3);
  CHECK_FALSE(g0.holds_gap);
  CHECK(g0.gap_location == doctest::Approx(0.5));
  CHECK_FALSE(g0.holds_kappa_gap);
  const GapReport g1 = gap_condition(p, 1, 1e-3);
  CHECK(g1.holds_kappa_gap);
  REQUIRE_FALSE(g1.contacts.empty());
  CHECK(g1.contacts.front().witness_order == 1);
  CHECK(std::abs(g1.contacts.front().derivatives[0]) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(minimal_kappa(p, 1e-3) == 1);
}

TEST_CASE("quadratic contact needs kappa = 2") {
  const EigenPaths p = eigen_paths(
      diagonal_family([](double t) { return (t - 0.5) * (t - 0.5); }, [](double) { return 0.0; }), uniform_grid(101));
  CHECK_FALSE(gap_condition(p, 0, 1e-3).holds_gap);
  CHECK_FALSE(gap_condition(p, 1, 1e-3).holds_kappa_gap);
  const GapReport g2 = gap_condition(p, 2, 1e-3);
  CHECK(g2.holds_kappa_gap);
  REQUIRE_FALSE(g2.contacts.empty());
  CHECK(g2.contacts.front().witness_order == 2);
  CHECK(minimal_kappa(p, 1e-3) == 2);
}

TEST_CASE("identical curves fail everywhere") {
  const std::vector<double> grid = uniform_grid(21);
  const EigenPaths p = eigen_paths(diagonal_family([](double t) { return t; }, [](double t) { return t; }), grid);
  const GapReport r = gap_condition(p, 3, 1e-3);
  CHECK_FALSE(r.holds_gap);
  CHECK_FALSE(r.holds_kappa_gap);
  CHECK(r.contacts.size() == grid.size());
  CHECK_FALSE(minimal_kappa(p, 1e-3).has_value());
}

TEST_CASE("stencil larger than the grid is refused") {
  const EigenPaths p = eigen_paths(diagonal_family([](double t) { return t; }, [](double t) { return -t; }),
                                   uniform_grid(4));
  CHECK_THROWS_AS(gap_condition(p, 4, 1e-3), NumericRefusal);
}

TEST_CASE("tridiagonal simplicity") {
  SUBCASE("Chebyshev spectrum") {
    const std::vector<double> a(5, 0.0), c(4, 1.0);
    const TridiagonalReport r = tridiagonal_simplicity(a, c);
    CHECK(r.off_diagonals_nonzero);
    CHECK(r.simple);
    for (int k = 1; k <= 5; ++k) CHECK(r.eigenvalues[5 - k] == doctest::Approx(2 * std::cos(k * pi / 6)).epsilon(1e-13));
    CHECK(r.min_eigen_gap == doctest::Approx(2 * std::cos(pi / 6) - 2 * std::cos(2 * pi / 6)).epsilon(1e-12));
  }
  SUBCASE("a zero off-diagonal removes the guarantee") {
    // Blocks [[0,1],[1,0]] and [1] share the eigenvalue 1.
    const std::vector<double> a{0, 0, 1}, c{1, 0};
    const TridiagonalReport r = tridiagonal_simplicity(a, c);
    CHECK_FALSE(r.off_diagonals_nonzero);
    CHECK_FALSE(r.simple);
    CHECK(r.min_eigen_gap < 1e-12);
  }
  SUBCASE("H_C at rho = w = 0") {
    const Eigensystem es = eigh(chirp_hamiltonian(7, 0.0, 0.0));
    CHECK(es.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("property: random tridiagonals with nonzero off-diagonals are simple") {
    auto g = testing::rng(41);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = testing::uniform_int(g, 2, 16);
      std::vector<double> a(n), c(n - 1);
      for (double& x : a) x = testing::uniform(g, -3, 3);
      for (double& x : c) x = testing::uniform(g, 0.05, 2) * (testing::uniform_int(g, 0, 1) ? 1 : -1);
      const TridiagonalReport r = tridiagonal_simplicity(a, c);
      CHECK(r.simple);
      const std::vector<double> roots = testing::tridiagonal_roots(a, c);
      for (int j = 0; j < n; ++j) CHECK(r.eigenvalues[j] == doctest::Approx(roots[j]).epsilon(1e-10));
    }
  }
}

TEST_CASE("three-level crossing has a closed form") {
  // H_S(0, w) = diag(1) + [[2, w], [w, 3]]: lambda = 1 meets 2.5 - sqrt(1/4 + w^2) at w = sqrt 2.
  const std::vector<double> d = one_to(3);
  for (Axis axis : {Axis::w1_zero, Axis::w2_zero}) {
    const CrossingReport r = eigen_intersections(d, axis);
    REQUIRE(r.crossings.size() == 1);
    CHECK(r.counts_match);
    CHECK(r.crossings[0].location == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(r.crossings[0].residual <= 1e-9);
    CHECK(std::abs(r.crossings[0].slope) > 0.1);
  }
}

TEST_CASE("crossing counts, order and residuals for m = 3..7") {
  for (int m = 3; m <= 7; ++m) {
    const std::vector<double> d = one_to(m);
    CHECK(default_crossing_range(d) == doctest::Approx(4.0 * (m - 1)));
    for (Axis axis : {Axis::w1_zero, Axis::w2_zero}) {
      CAPTURE(m);
      CAPTURE(axis_name(axis));
      const CrossingReport r = eigen_intersections(d, axis);
      CHECK(r.counts_match);
      CHECK(r.monotone);
      std::size_t plain = 0;
      for (const Crossing& c : r.crossings) {
        CHECK(c.location > 0.0);
        CHECK(c.residual <= 1e-9);
        // The located point is a degeneracy of the independent Sturm solver too.
        CHECK(oracle_gap(d, axis, c.location, c.k) <= 1e-7);
        if (!c.star) ++plain;
      }
      CHECK(plain == r.expected);
      const std::size_t half = static_cast<std::size_t>((m - 1) / 2);
      if (m % 2 == 1) CHECK(plain == half);
      if (m % 2 == 0 && axis == Axis::w1_zero) {
        CHECK(plain == half);
        CHECK(std::count_if(r.crossings.begin(), r.crossings.end(), [](auto& c) { return c.star; }) == 1);
      }
      if (m % 2 == 0 && axis == Axis::w2_zero) {
        CHECK(plain == half);
        REQUIRE(r.top_pair_separated.has_value());
        CHECK(*r.top_pair_separated);
      }
    }
  }
}

TEST_CASE("crossings step through consecutive pairs") {
  const std::vector<double> d = one_to(5);
  const CrossingReport up = eigen_intersections(d, Axis::w1_zero);
  REQUIRE(up.crossings.size() == 2);
  CHECK(up.crossings[0].k == 1);
  CHECK(up.crossings[1].k == 2);
  CHECK(up.crossings[0].location < up.crossings[1].location);
  const CrossingReport down = eigen_intersections(d, Axis::w2_zero);
  REQUIRE(down.crossings.size() == 2);
  CHECK(down.crossings[0].k == 4);
  CHECK(down.crossings[1].k == 3);
  CHECK(down.crossings[0].location < down.crossings[1].location);
}

TEST_CASE("log-log slope of an exact power law") {
  const std::vector<double> x{0.5, 0.25, 0.1, 0.01};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 2.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("oscillatory integrals") {
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
  SUBCASE("zero amplitude") {
    const OscillatoryOrder o = oscillatory_order(ScalarFn(), ScalarFn::identity(), 1.0, 1.0, eps);
    CHECK(std::isinf(o.slope));
  }
  SUBCASE("closed form for a = 1, h = 0") {
    for (double alpha : {0.5, 1.0, 2.0}) {
      const double beta = 1.0;
      const OscillatoryOrder o = oscillatory_order(ScalarFn::constant(1.0), ScalarFn(), beta, alpha, eps);
      for (std::size_t i = 0; i < eps.size(); ++i) {
        // |int_0^tau e^{i beta s / q} ds| = (q / beta) |e^{i beta tau / q} - 1|, q = eps^(alpha+1), sup 2q/beta.
        const double q = std::pow(eps[i], alpha + 1);
        CHECK(o.sups[i] == doctest::Approx(2 * q / beta).epsilon(1e-6));
      }
      CHECK(o.slope == doctest::Approx(alpha + 1).epsilon(1e-6));
    }
  }
  SUBCASE("smooth amplitude and phase") {
    const ScalarFn a = ScalarFn::polynomial({1, 0, 1});
    const OscillatoryOrder o = oscillatory_order(a, ScalarFn::sin_affine(pi), 2.0, 1.5, eps);
    CHECK(o.slope >= 2.5 - 0.3);
  }
}
