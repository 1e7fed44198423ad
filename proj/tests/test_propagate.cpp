#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "rwad/errors.hpp"
#include "rwad/propagate.hpp"
#include "rwad/spectral.hpp"
#include "support.hpp"

using namespace rwad;
using std::numbers::pi;
using testing::Complex;

namespace {

CMat chain(const std::vector<double>& off) {
  const int n = static_cast<int>(off.size()) + 1;
  CMat m = CMat::Zero(n, n);
  for (int j = 0; j + 1 < n; ++j) m(j, j + 1) = m(j + 1, j) = off[j];
  return m;
}

CVec e(int n, int j) {
  CVec v = CVec::Zero(n);
  v[j] = 1.0;
  return v;
}

IntegratorSettings settings(Method m, double rho = 20.0) {
  IntegratorSettings s;
  s.method = m;
  s.rho = rho;
  return s;
}

struct TwoLevel {
  QuantumSystem sys{{0, 1}, chain({1})};
  SpectralGapStructure s = spectral_gaps(sys);
};

// 3-level chirp surrogate: E = (0, 1, 2.5), chain couplings 1.
struct Chirp3 {
  QuantumSystem sys{{0, 1, 2.5}, chain({1, 1})};
  SpectralGapStructure s = spectral_gaps(sys);
  ControlSchedule c = chirp_schedule(3, s, 4.0 * ScalarFn::sin_affine(pi), (-2.0 / pi) * ScalarFn::sin_affine(pi));
};

}  // namespace

TEST_CASE("uniform grid") {
  const std::vector<double> g = uniform_grid(512);
  REQUIRE(g.size() == 512);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK_THROWS(uniform_grid(1));
}

TEST_CASE("drift-only evolution") {
  const QuantumSystem sys({0, 1, 2.5, 4}, chain({1, 1, 1}));
  const SpectralGapStructure s = spectral_gaps(sys);
  const SynthesizedPulse u = synthesize(s, EnvelopeSchedule{std::vector<ScalarFn>(s.size())}, PhaseVector::zero(4),
                                        PulseParams(0.3, 1.5));
  auto g = testing::rng(3);
  const CVec psi0 = testing::random_state(g, 4);
  const std::vector<double> grid = uniform_grid(9);
  const Trajectory tr = propagate_lab(sys, u, psi0, settings(Method::magnus2), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i] * u.params().horizon();
    for (int j = 0; j < 4; ++j) CHECK(std::abs(tr.states[i][j] - std::polar(1.0, -sys.energies[j] * t) * psi0[j]) < 1e-12);
  }
  const Trajectory rot = propagate_rotating(sys, u, psi0, settings(Method::magnus2), grid);
  for (const CVec& psi : rot.states) CHECK((psi - psi0).norm() < 1e-13);
}

TEST_CASE("resonant drive follows the Rabi formula as epsilon shrinks") {
  // Constant envelope c at phi = 0: the reference flow rotates e_1 into e_2 as sin^2(c tau / eps).
  TwoLevel q;
  const double c = 0.5;
  const EnvelopeSchedule v{{ScalarFn::constant(c)}};
  const std::vector<double> grid = uniform_grid(65);
  std::vector<double> errs;
  for (double eps : {0.2, 0.1, 0.05}) {
    const SynthesizedPulse u = synthesize(q.s, v, PhaseVector::zero(2), PulseParams(eps, 2.0));
    const Trajectory tr = propagate_lab(q.sys, u, e(2, 0), settings(Method::magnus4), grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double rabi = std::pow(std::sin(c * grid[i] / eps), 2);
      worst = std::max(worst, std::abs(tr.populations(i)[1] - rabi));
    }
    errs.push_back(worst);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
  CHECK(errs[2] < 0.02);
}

TEST_CASE("lab and rotating frames agree through V_eps") {
  Chirp3 q;
  const SynthesizedPulse u = synthesize(q.s, q.c.envelopes, q.c.phases, PulseParams(0.2, 1.5));
  const std::vector<double> grid = uniform_grid(129);
  const Trajectory lab = propagate_lab(q.sys, u, e(3, 0), settings(Method::magnus4, 80), grid);
  const Trajectory rot = propagate_rotating(q.sys, u, e(3, 0), settings(Method::magnus4, 80), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const UnitaryMatrix v = frame_phase(q.sys.energies, q.c.phases, 0.2, 1.5, grid[i]);
    CHECK((v.apply(rot.states[i]) - lab.states[i]).norm() <= 1e-5);
  }
}

TEST_CASE("oscillating remainder of a single carrier is the counter-rotating term") {
  TwoLevel q;
  const ScalarFn v = ScalarFn::sin_affine(pi) + ScalarFn::constant(0.25);
  const ScalarFn f = 0.3 * ScalarFn::sin_affine(2 * pi);
  const PhaseVector phi({ScalarFn(), f});
  const double eps = 0.1, alpha = 1.5;
  const SynthesizedPulse u = synthesize(q.s, EnvelopeSchedule{{v}}, phi, PulseParams(eps, alpha));
  for (double tau : {0.0, 0.137, 0.5, 0.91}) {
    const double t = tau / std::pow(eps, alpha + 1);
    const double chi = t + f(tau) / eps;
    const CMat b = oscillating_remainder(q.sys, u, tau);
    const Complex expect = Complex(0, -1) * v(tau) * std::exp(Complex(0, 2 * chi));
    CHECK(std::abs(b(1, 0) - expect) < 1e-9);
    CHECK(std::abs(b(0, 1) + std::conj(expect)) < 1e-9);
    CHECK(std::abs(b(0, 0)) < 1e-12);
    CHECK(std::abs(b(1, 1)) < 1e-12);
    // The rest of the generator is h_d / eps.
    const CMat hd = hd_at(phi, EnvelopeSchedule{{v}}, q.s, tau).matrix();
    CHECK((rotating_generator(q.sys, u, tau) * eps - hd - Complex(0, 1) * b).norm() < 1e-9);
  }
}

TEST_CASE("reference flow of a constant diagonal family") {
  RVec c(3);
  c << -1.0, 0.5, 2.0;
  const HermitianMatrix h = HermitianMatrix::diagonal(c);
  auto g = testing::rng(9);
  const CVec psi0 = testing::random_state(g, 3);
  const std::vector<double> grid = uniform_grid(11);
  const double eps = 0.05;
  const Trajectory tr = adiabatic_reference([&](double) { return h; }, eps, psi0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(tr.states[i][j] - std::polar(1.0, -c[j] * grid[i] / eps) * psi0[j]) < 1e-12);
}

TEST_CASE("seven-level chirp reference flow transfers e_1 to e_7 adiabatically") {
  std::vector<double> en{0, 1, 2.5, 3, 2.2, 5, 7};
  const SpectralGapStructure s = spectral_gaps(QuantumSystem(en, chain(std::vector<double>(6, 1.0))));
  const ControlSchedule c = chirp_schedule(7, s, 4.0 * ScalarFn::sin_affine(pi), (-2.0 / pi) * ScalarFn::sin_affine(pi));
  const Trajectory tr = adiabatic_reference([&](double tau) { return hd_at(c.phases, c.envelopes, s, tau); }, 1e-3,
                                            e(7, 0), uniform_grid(33), settings(Method::magnus4));
  CHECK(tr.populations(tr.size() - 1)[6] >= 0.999);
}

TEST_CASE("adiabatic transporter converges at first order") {
  // h(tau) = R(tau) diag(-1, 0, 1) R(tau)^T with R a one-parameter rotation group: uniform gap 1.
  auto g = testing::rng(21);
  const CMat gen = CMat(testing::random_skew(g, 3).real().cast<Complex>());
  RVec d(3);
  d << -1.0, 0.0, 1.0;
  const HermitianFamily fam = [&](double tau) {
    const CMat r = expm_skew(gen, 2.0 * tau).matrix();
    return HermitianMatrix(r * HermitianMatrix::diagonal(d).matrix() * r.adjoint());
  };
  const EigenPaths paths = eigen_paths(fam, uniform_grid(513));
  const CVec psi0 = testing::random_state(g, 3);
  const std::vector<double> grid{0.0, 0.5, 1.0};
  std::vector<double> eps{0.04, 0.02, 0.01, 0.005}, err;
  for (double ep : eps) {
    const Trajectory ref = adiabatic_reference(fam, ep, psi0, grid, settings(Method::magnus4, 40));
    const UnitaryMatrix up = adiabatic_transporter(paths, ep, 1.0);
    CHECK(unitarity_defect(up.matrix()) <= 1e-10);
    err.push_back((ref.final_state() - up.apply(psi0)).norm());
  }
  CHECK(loglog_slope(eps, err) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("transporter of a constant family is the exact exponential") {
  auto g = testing::rng(22);
  const HermitianMatrix h(testing::random_hermitian(g, 4));
  const EigenPaths paths = eigen_paths([&](double) { return h; }, uniform_grid(17));
  const UnitaryMatrix up = adiabatic_transporter(paths, 0.1, 0.6);
  CHECK((up.matrix() - expm_hermitian(h, 0.6 / 0.1).matrix()).norm() < 1e-9);
}

TEST_CASE("transporter refuses meeting eigenvalues") {
  RVec d(2);
  const EigenPaths paths = eigen_paths(
      [&](double t) {
        d << t - 0.5, 0.5 - t;
        return HermitianMatrix::diagonal(d);
      },
      uniform_grid(33));
  CHECK_THROWS_AS(adiabatic_transporter(paths, 0.1, 1.0), NumericRefusal);
}

TEST_CASE("frame phase") {
  Chirp3 q;
  CHECK((frame_phase(q.sys.energies, q.c.phases, 0.05, 1.5, 0.0).matrix() - CMat::Identity(3, 3)).norm() == 0.0);
  RVec e2(2);
  e2 << 0.0, 1.0;
  const double eps = 0.1, alpha = 1.5;
  const UnitaryMatrix period = frame_phase(e2, PhaseVector::zero(2), eps, alpha, std::pow(eps, alpha + 1) * 2 * pi);
  CHECK((period.matrix() - CMat::Identity(2, 2)).norm() < 1e-12);

  // Seven levels at tau = 1, eps = 1e-2, alpha = 1.2, reduced in long double.
  std::vector<double> en{0, 1, 2.5, 3, 2.2, 5, 7};
  const SpectralGapStructure s = spectral_gaps(QuantumSystem(en, chain(std::vector<double>(6, 1.0))));
  const ControlSchedule c = chirp_schedule(7, s, 4.0 * ScalarFn::sin_affine(pi), (-2.0 / pi) * ScalarFn::sin_affine(pi));
  const UnitaryMatrix v = frame_phase(s.energies, c.phases, 1e-2, 1.2, 1.0);
  const long double t = std::pow(1e-2L, -2.2L);
  for (int j = 0; j < 7; ++j) {
    const long double arg = std::fmod(static_cast<long double>(en[j]) * t + c.phases[j](1.0) / 1e-2L, 2 * std::numbers::pi_v<long double>);
    const Complex expect = std::polar(1.0, -static_cast<double>(arg));
    CHECK(std::abs(v(j, j) - expect) < 1e-9);
  }
}

TEST_CASE("flow error") {
  Chirp3 q;
  const double eps = 0.2, alpha = 1.5;
  const SynthesizedPulse u = synthesize(q.s, q.c.envelopes, q.c.phases, PulseParams(eps, alpha));
  const std::vector<double> grid = uniform_grid(17);
  const Trajectory lab = propagate_lab(q.sys, u, e(3, 0), settings(Method::magnus4), grid);
  Trajectory pulled = lab;
  pulled.frame = Frame::reference;
  for (std::size_t i = 0; i < grid.size(); ++i)
    pulled.states[i] = frame_phase(q.sys.energies, q.c.phases, eps, alpha, grid[i]).matrix().adjoint() * lab.states[i];
  const FlowError zero = flow_error(lab, pulled, q.sys.energies, q.c.phases);
  CHECK(zero.sup_error < 1e-14);
  CHECK(zero.min_fidelity == doctest::Approx(1.0));
  CHECK_THROWS_AS(flow_error(pulled, lab, q.sys.energies, q.c.phases), ValidationError);
  Trajectory shorter = pulled;
  shorter.tau.pop_back();
  shorter.states.pop_back();
  CHECK_THROWS_AS(flow_error(lab, shorter, q.sys.energies, q.c.phases), ValidationError);
}

TEST_CASE("two-level error decays at the predicted rate") {
  // alpha = 2, kappa = 0: rate min(1, 1) = 1; halving eps should halve the error within a factor 1.5.
  TwoLevel q;
  const ControlSchedule c = chirp_schedule(2, q.s, 4.0 * ScalarFn::sin_affine(pi), (-2.0 / pi) * ScalarFn::sin_affine(pi));
  const std::vector<double> grid = uniform_grid(129);
  const HermitianFamily hd = [&](double tau) { return hd_at(c.phases, c.envelopes, q.s, tau); };
  auto sup_error = [&](double eps) {
    const SynthesizedPulse u = synthesize(q.s, c.envelopes, c.phases, PulseParams(eps, 2.0));
    const Trajectory rot = propagate_rotating(q.sys, u, e(2, 0), settings(Method::magnus4), grid);
    const Trajectory ref = adiabatic_reference(hd, eps, e(2, 0), grid, settings(Method::magnus4));
    return flow_error(rot, ref, q.sys.energies, c.phases).sup_error;
  };
  const double ratio = sup_error(0.04) / sup_error(0.02);
  CHECK(ratio >= 2.0 / 1.5);
  CHECK(ratio <= 2.0 * 1.5);
}

TEST_CASE("under-resolved steps are refused") {
  Chirp3 q;
  const SynthesizedPulse u = synthesize(q.s, q.c.envelopes, q.c.phases, PulseParams(0.2, 1.5));
  IntegratorSettings s = settings(Method::magnus2);
  s.max_step = 10.0;
  CHECK_THROWS_AS(propagate_lab(q.sys, u, e(3, 0), s, uniform_grid(5)), NumericRefusal);
  CHECK_THROWS_AS(propagate_lab(q.sys, u, e(2, 0), settings(Method::magnus2), uniform_grid(5)), ValidationError);
}

TEST_CASE("trajectory CSV layout") {
  Chirp3 q;
  const SynthesizedPulse u = synthesize(q.s, q.c.envelopes, q.c.phases, PulseParams(0.3, 1.5));
  const Trajectory tr = propagate_lab(q.sys, u, e(3, 0), settings(Method::magnus2), uniform_grid(5));
  std::ostringstream out;
  tr.write_csv(out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "tau,re_psi_1,im_psi_1,re_psi_2,im_psi_2,re_psi_3,im_psi_3,p_1,p_2,p_3,norm");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("property: lab propagation is unitary and linear") {
  auto g = testing::rng(55);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = testing::uniform_int(g, 2, 5);
    std::vector<double> en(n), off(n - 1);
    for (int j = 0; j < n; ++j) en[j] = j + 0.173 * j * j;
    for (double& x : off) x = testing::uniform(g, 0.5, 1.5);
    const QuantumSystem sys(en, chain(off));
    const SpectralGapStructure s = spectral_gaps(sys);
    const ControlSchedule c = chirp_schedule(n, s, testing::uniform(g, 1, 4) * ScalarFn::sin_affine(pi),
                                             testing::uniform(g, -1, 1) * ScalarFn::sin_affine(pi));
    const SynthesizedPulse u = synthesize(s, c.envelopes, c.phases, PulseParams(testing::uniform(g, 0.15, 0.3), 1.5));
    const std::vector<double> grid = uniform_grid(9);
    const CVec x = testing::random_state(g, n), y = testing::random_state(g, n);
    const Complex a(0.6, 0.3), b(-0.2, 0.7);
    const CVec z = (a * x + b * y).normalized();
    const double scale = (a * x + b * y).norm();
    const Trajectory tx = propagate_lab(sys, u, x, settings(Method::magnus4), grid);
    const Trajectory ty = propagate_lab(sys, u, y, settings(Method::magnus4), grid);
    const Trajectory tz = propagate_lab(sys, u, z, settings(Method::magnus4), grid);
    CHECK(tx.max_norm_drift() <= 1e-8);
    CHECK(tx.max_population_defect() <= 1e-8);
    CHECK((scale * tz.final_state() - (a * tx.final_state() + b * ty.final_state())).norm() < 1e-10);
  }
}
