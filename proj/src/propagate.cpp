#include "rwad/propagate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rwad/errors.hpp"

namespace rwad {

std::string_view frame_name(Frame f) {
  switch (f) {
    case Frame::lab: return "lab";
    case Frame::rotating: return "rotating";
    case Frame::reference: return "reference";
  }
  return "?";
}

RVec Trajectory::populations(std::size_t i) const { return states[i].cwiseAbs2(); }

double Trajectory::max_norm_drift() const {
  double worst = 0.0;
  for (const CVec& s : states) worst = std::max(worst, std::abs(s.norm() - 1.0));
  return worst;
}

double Trajectory::max_population_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) worst = std::max(worst, std::abs(populations(i).sum() - 1.0));
  return worst;
}

void Trajectory::write_csv(std::ostream& out) const {
  const int n = states.empty() ? 0 : static_cast<int>(states.front().size());
  std::string line = "tau";
  for (int j = 1; j <= n; ++j) line += fmt::format(",re_psi_{0},im_psi_{0}", j);
  for (int j = 1; j <= n; ++j) line += fmt::format(",p_{}", j);
  line += ",norm\n";
  out << line;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const CVec& s = states[i];
    line = fmt::format("{:.17g}", tau[i]);
    for (int j = 0; j < n; ++j) line += fmt::format(",{:.17g},{:.17g}", s[j].real(), s[j].imag());
    for (int j = 0; j < n; ++j) line += fmt::format(",{:.17g}", std::norm(s[j]));
    line += fmt::format(",{:.17g}\n", s.norm());
    out << line;
  }
}

std::vector<double> uniform_grid(int points) {
  if (points < 2) throw ValidationError("a grid needs at least two points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = static_cast<double>(i) / (points - 1);
  g.back() = 1.0;
  return g;
}

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("sample grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ValidationError(fmt::format("grid point {} outside [0,1]", grid[i]));
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ValidationError("sample grid must be strictly increasing");
  }
}

void check_state(const CVec& psi, int n) {
  if (psi.size() != n) throw ValidationError(fmt::format("initial state has {} entries, expected {}", psi.size(), n));
  if (std::abs(psi.norm() - 1.0) > 1e-12)
    throw ValidationError(fmt::format("initial state norm {:.15g} is not 1", psi.norm()));
}

void check_pair(const QuantumSystem& sys, const SynthesizedPulse& pulse) {
  const SpectralGapStructure& s = pulse.structure();
  if (s.dim() != sys.dim()) throw ValidationError("pulse and system have different dimensions");
  for (int j = 0; j < sys.dim(); ++j)
    if (std::abs(s.energies[j] - sys.energies[j]) > 1e-12)
      throw ValidationError("pulse was synthesized for different drift energies");
}

double max_phase_rate(const SynthesizedPulse& pulse) {
  double worst = 0.0;
  for (const Carrier& c : pulse.carriers())
    for (int i = 0; i <= 256; ++i) {
      const double tau = i / 256.0;
      const double rate = pulse.phases()[c.representative.row].derivative(tau) -
                          pulse.phases()[c.representative.col].derivative(tau);
      worst = std::max(worst, std::abs(rate));
    }
  return worst;
}

void check_settings(const IntegratorSettings& s) {
  if (!(s.rho > 0.0)) throw ValidationError("rho must be positive");
  if (!(s.rel_tol > 0.0)) throw ValidationError("rel_tol must be positive");
}

Trajectory run(MagnusIntegrator& integ, Frame frame, const CVec& psi0, std::span<const double> grid,
               double time_per_tau) {
  Trajectory tr;
  tr.frame = frame;
  CVec psi = psi0;
  double t = 0.0;
  for (double tau : grid) {
    const double target = tau * time_per_tau;
    integ.advance(psi, t, target);
    t = target;
    tr.tau.push_back(tau);
    tr.states.push_back(psi);
  }
  tr.stats = integ.stats();
  tr.step = integ.step();
  return tr;
}

}  // namespace

double lab_omega_max(const QuantumSystem& sys, const SynthesizedPulse& pulse) {
  double sigma = 0.0;
  for (const Carrier& c : pulse.carriers()) sigma = std::max(sigma, c.sigma);
  return sigma + pulse.params().amplitude_scale() * max_phase_rate(pulse) + sys.energies.cwiseAbs().maxCoeff();
}

Trajectory propagate_lab(const QuantumSystem& sys, const SynthesizedPulse& pulse, const CVec& psi0,
                         const IntegratorSettings& settings, std::span<const double> grid) {
  check_pair(sys, pulse);
  check_state(psi0, sys.dim());
  check_grid(grid);
  check_settings(settings);
  const double omega = lab_omega_max(sys, pulse);
  const double bound = 2.0 * std::numbers::pi / (settings.rho * omega);
  const CMat h0 = sys.drift().matrix();
  const CMat h1 = sys.coupling.matrix();
  Generator gen = [&](double t, CMat& out) { out = h0 + pulse(t) * h1; };
  MagnusIntegrator integ(gen, sys.dim(), settings, bound);
  Trajectory tr = run(integ, Frame::lab, psi0, grid, pulse.params().horizon());
  tr.epsilon = pulse.params().epsilon();
  tr.alpha = pulse.params().alpha();
  tr.settings = settings;
  tr.omega_max = omega;
  return tr;
}

CMat rotating_generator(const QuantumSystem& sys, const SynthesizedPulse& pulse, double tau) {
  const int n = sys.dim();
  const double eps = pulse.params().epsilon();
  const double t = tau / pulse.params().time_scale();
  const PhaseVector& phi = pulse.phases();
  std::array<Dual, kMaxDim> ph;
  for (int j = 0; j < n; ++j) ph[j] = phi[j].eval(tau);
  const double c = pulse.normalized_at_tau(tau);
  RVec theta(n);
  for (int j = 0; j < n; ++j) theta[j] = reduce_two_pi(sys.energies[j] * t) + ph[j].value / eps;
  const CMat& h1 = sys.coupling.matrix();
  CMat g = CMat::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      if (h1(j, k) == Complex(0.0)) continue;
      g(j, k) = c * std::polar(1.0, theta[j] - theta[k]) * h1(j, k);
    }
  for (int j = 0; j < n; ++j) g(j, j) -= ph[j].derivative;
  return g / eps;
}

CMat oscillating_remainder(const QuantumSystem& sys, const SynthesizedPulse& pulse, double tau) {
  check_pair(sys, pulse);
  const double eps = pulse.params().epsilon();
  const SpectralGapStructure s = spectral_gaps(sys, pulse.structure().zero_tol);
  if (s.size() != pulse.structure().size())
    throw ValidationError("system coupling has a different gap set than the pulse");
  const CMat hd = hd_at(pulse.phases(), pulse.envelopes(), s, tau).matrix();
  return Complex(0.0, -1.0) * (eps * rotating_generator(sys, pulse, tau) - hd);
}

Trajectory propagate_rotating(const QuantumSystem& sys, const SynthesizedPulse& pulse, const CVec& psi0,
                              const IntegratorSettings& settings, std::span<const double> grid) {
  check_pair(sys, pulse);
  check_state(psi0, sys.dim());
  check_grid(grid);
  check_settings(settings);
  const double omega = lab_omega_max(sys, pulse) / pulse.params().time_scale();
  const double bound = 2.0 * std::numbers::pi / (settings.rho * omega);
  Generator gen = [&](double tau, CMat& out) { out = rotating_generator(sys, pulse, tau); };
  MagnusIntegrator integ(gen, sys.dim(), settings, bound);
  Trajectory tr = run(integ, Frame::rotating, psi0, grid, 1.0);
  tr.epsilon = pulse.params().epsilon();
  tr.alpha = pulse.params().alpha();
  tr.settings = settings;
  tr.omega_max = omega;
  return tr;
}

Trajectory adiabatic_reference(const HermitianFamily& hd, double epsilon, const CVec& psi0,
                               std::span<const double> grid, const IntegratorSettings& settings) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  check_grid(grid);
  check_settings(settings);
  const HermitianMatrix h0 = hd(0.0);
  check_state(psi0, h0.dim());
  double norm = 0.0;
  for (int i = 0; i <= 256; ++i) {
    const RVec ev = eigh(hd(i / 256.0)).values;
    norm = std::max(norm, ev.cwiseAbs().maxCoeff());
  }
  const double omega = std::max(norm, 1e-12) / epsilon;
  const double bound = 2.0 * std::numbers::pi / (settings.rho * omega);
  Generator gen = [&](double tau, CMat& out) { out = hd(std::clamp(tau, 0.0, 1.0)).matrix() / epsilon; };
  MagnusIntegrator integ(gen, h0.dim(), settings, bound);
  Trajectory tr = run(integ, Frame::reference, psi0, grid, 1.0);
  tr.epsilon = epsilon;
  tr.settings = settings;
  tr.omega_max = omega;
  return tr;
}

UnitaryMatrix frame_phase(const RVec& energies, const PhaseVector& phi, double epsilon, double alpha, double tau) {
  if (phi.dim() != energies.size()) throw ValidationError("phase vector and energies differ in length");
  const int n = static_cast<int>(energies.size());
  const double t = tau / std::pow(epsilon, alpha + 1.0);
  CMat v = CMat::Zero(n, n);
  for (int j = 0; j < n; ++j) v(j, j) = std::polar(1.0, -(reduce_two_pi(energies[j] * t) + phi[j](tau) / epsilon));
  return UnitaryMatrix(v);
}

FlowError flow_error(const Trajectory& fast, const Trajectory& ref, const RVec& energies,
                         const PhaseVector& phi) {
  if (fast.frame == Frame::reference || ref.frame != Frame::reference)
    throw ValidationError("flow_error compares a lab or rotating trajectory with a reference trajectory");
  if (fast.size() != ref.size()) throw ValidationError("trajectories have different grid sizes");
  if (std::abs(fast.epsilon - ref.epsilon) > 1e-15 * fast.epsilon)
    throw ValidationError("trajectories use different epsilon");
  FlowError e;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    if (std::abs(fast.tau[i] - ref.tau[i]) > 1e-14) throw ValidationError("trajectory grids differ");
    const double tau = fast.tau[i];
    CVec rot = fast.states[i];
    if (fast.frame == Frame::lab) {
      const UnitaryMatrix v = frame_phase(energies, phi, fast.epsilon, fast.alpha, tau);
      rot = v.matrix().adjoint() * rot;
    }
    const double err = (rot - ref.states[i]).norm();
    const double fid = std::abs(ref.states[i].dot(rot));
    e.tau.push_back(tau);
    e.error.push_back(err);
    e.fidelity.push_back(fid);
    e.sup_error = std::max(e.sup_error, err);
    e.min_fidelity = std::min(e.min_fidelity, fid);
  }
  return e;
}

UnitaryMatrix adiabatic_transporter(const EigenPaths& paths, double epsilon, double tau) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (paths.size() < 3) throw ValidationError("transporter needs at least three eigenpath samples");
  if (paths.grid.front() != 0.0) throw ValidationError("eigenpaths must start at tau = 0");
  if (!(tau >= 0.0 && tau <= paths.grid.back())) throw ValidationError(fmt::format("tau = {} outside the paths", tau));
  const int n = paths.dim();

  double scale = 1.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    RVec v = paths.values[i];
    scale = std::max(scale, v.cwiseAbs().maxCoeff());
    std::sort(v.begin(), v.end());
    for (int j = 0; j + 1 < n; ++j)
      if (v[j + 1] - v[j] <= 1e-8 * scale)
        throw NumericRefusal(fmt::format("eigenvalues {} and {} meet near tau = {:.6g}", j + 1, j + 2, paths.grid[i]));
  }
  // Tracked order equals sorted order when no two curves meet.
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (int j = 0; j + 1 < n; ++j)
      if (!(paths.values[i][j] < paths.values[i][j + 1]))
        throw NumericRefusal("eigenpaths are not in sorted order; the family violates the gap condition");

  // D_jj = (dp_j/dtau)^* p_j from centred differences of the phase-continuous frame.
  const std::size_t m = paths.size();
  std::vector<Eigen::Matrix<Complex, Eigen::Dynamic, 1>> d(m, Eigen::Matrix<Complex, Eigen::Dynamic, 1>(n));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == m ? i : i + 1;
    const double span = paths.grid[hi] - paths.grid[lo];
    for (int j = 0; j < n; ++j) {
      const CVec dp = (paths.frames[hi].col(j) - paths.frames[lo].col(j)) / span;
      d[i][j] = dp.dot(paths.frames[i].col(j));
    }
  }
  std::vector<Complex> int_d(n, Complex(0.0));
  for (std::size_t i = 0; i + 1 < m && paths.grid[i] < tau; ++i) {
    const double a = paths.grid[i];
    const double b = std::min(paths.grid[i + 1], tau);
    const double frac = (b - a) / (paths.grid[i + 1] - a);
    for (int j = 0; j < n; ++j) {
      const Complex db = d[i][j] + frac * (d[i + 1][j] - d[i][j]);
      int_d[j] += 0.5 * (b - a) * (d[i][j] + db);
    }
  }

  CVec diag(n);
  for (int j = 0; j < n; ++j) {
    // Shifted away from zero so the relative quadrature tolerance stays meaningful.
    const double shift = 2.0 * scale;
    auto lambda = [&](double s) { return eigh(paths.family(s)).values[j] + shift; };
    double lam = 0.0;
    if (tau > 0.0)
      lam = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(lambda, 0.0, tau, 15, 1e-12) - shift * tau;
    // The real part of int D is discretization noise: D is skew-Hermitian.
    diag[j] = std::polar(1.0, -lam / epsilon + int_d[j].imag());
  }
  const Eigensystem at = aligned_eigensystem(paths, tau);
  const CMat& p0 = paths.frames.front();
  return UnitaryMatrix(at.vectors.matrix() * diag.asDiagonal() * p0.adjoint());
}

}  // namespace rwad
