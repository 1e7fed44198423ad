#include "rwad/pulses.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rwad/errors.hpp"

namespace rwad {

double reduce_two_pi(double x) {
  constexpr double hi = 6.283185307179586;
  constexpr double lo = 2.4492935982947064e-16;
  const double k = std::nearbyint(x / hi);
  return std::fma(-k, hi, x) - k * lo;
}

PulseParams::PulseParams(double epsilon, double alpha, bool allow_subcritical)
    : epsilon_(epsilon), alpha_(alpha) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ValidationError(fmt::format("epsilon must be positive, got {}", epsilon));
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ValidationError(fmt::format("alpha must be positive, got {}", alpha));
  if (alpha <= 1.0 && !allow_subcritical)
    throw ValidationError(fmt::format("alpha = {} <= 1 requires allow_subcritical", alpha));
  time_scale_ = std::pow(epsilon, alpha + 1.0);
  amplitude_scale_ = std::pow(epsilon, alpha);
}

double SynthesizedPulse::normalized_at_tau(double tau) const {
  const Data& d = *data_;
  const double t = tau / d.params.time_scale();
  const double inv_eps = 1.0 / d.params.epsilon();
  double u = 0.0;
  if (d.zero_gap) u += d.envelopes.envelopes[*d.zero_gap](tau);
  for (const Carrier& c : d.carriers) {
    const double v = d.envelopes.envelopes[c.gap_index](tau);
    if (v == 0.0) continue;
    const double phase = d.phases[c.representative.row](tau) - d.phases[c.representative.col](tau);
    u += 2.0 * v * std::cos(reduce_two_pi(c.sigma * t) + phase * inv_eps);
  }
  return u;
}

double SynthesizedPulse::at_tau(double tau, double t) const {
  const Data& d = *data_;
  const double inv_eps = 1.0 / d.params.epsilon();
  double u = 0.0;
  if (d.zero_gap) u += d.envelopes.envelopes[*d.zero_gap](tau);
  for (const Carrier& c : d.carriers) {
    const double v = d.envelopes.envelopes[c.gap_index](tau);
    if (v == 0.0) continue;
    const double phase = d.phases[c.representative.row](tau) - d.phases[c.representative.col](tau);
    u += 2.0 * v * std::cos(reduce_two_pi(c.sigma * t) + phase * inv_eps);
  }
  return d.params.amplitude_scale() * u;
}

double SynthesizedPulse::amplitude_bound() const {
  const Data& d = *data_;
  double b = 0.0;
  if (d.zero_gap) b += sup_norm(d.envelopes.envelopes[*d.zero_gap]);
  for (const Carrier& c : d.carriers) b += 2.0 * sup_norm(d.envelopes.envelopes[c.gap_index]);
  return d.params.amplitude_scale() * b;
}

SynthesizedPulse synthesize(const SpectralGapStructure& s, const EnvelopeSchedule& v, const PhaseVector& phi,
                            const PulseParams& p, std::span<const std::size_t> representatives) {
  std::vector<double> grid(257);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / (grid.size() - 1);
  const PhaseConstraintReport report = check_phase_constraint(phi, v, s, grid);
  if (!report.ok()) {
    std::string msg = "phase constraint violated:";
    for (const auto& viol : report.violations)
      msg += fmt::format(" sigma={} ({},{})/({},{}) mismatch {:.3e};", s.gaps[viol.gap_index], viol.first.row + 1,
                         viol.first.col + 1, viol.second.row + 1, viol.second.col + 1, viol.max_mismatch);
    throw NumericRefusal(msg);
  }
  if (!representatives.empty() && representatives.size() != s.size())
    throw ValidationError("representative selection must list one index per gap");

  auto data = std::make_shared<SynthesizedPulse::Data>(SynthesizedPulse::Data{s, v, phi, p, {}, std::nullopt});
  for (std::size_t g = 0; g < s.size(); ++g) {
    if (s.gaps[g] == 0.0) {
      data->zero_gap = g;
      continue;
    }
    const std::size_t pick = representatives.empty() ? 0 : representatives[g];
    if (pick >= s.resonance_sets[g].size())
      throw ValidationError(fmt::format("gap {} has no resonant pair #{}", s.gaps[g], pick));
    data->carriers.push_back(Carrier{g, s.gaps[g], s.resonance_sets[g][pick]});
  }
  return SynthesizedPulse(std::move(data));
}

namespace {

/// Real coupling along link (j, j+1) of a non-resonant chain 0..m-1.
std::vector<double> chain_couplings(int m, const SpectralGapStructure& s) {
  if (m < 2 || m > s.dim())
    throw ValidationError(fmt::format("chain length m = {} must lie in [2, {}]", m, s.dim()));
  std::vector<double> c(m - 1);
  for (int j = 0; j + 1 < m; ++j) {
    if (!is_nonresonant_link(s, j, j + 1)) {
      const auto g = s.gap_of_link(j, j + 1);
      if (!g) throw NumericRefusal(fmt::format("levels {} and {} are not coupled", j + 1, j + 2));
      throw NumericRefusal(fmt::format("link ({},{}) is resonant: gap {} is realized by {} pairs", j + 1, j + 2,
                                       s.gaps[*g], s.resonance_sets[*g].size()));
    }
    const Complex h = s.coupling(j, j + 1);
    if (std::abs(h.imag()) > s.zero_tol)
      throw ValidationError(fmt::format("coupling ({},{}) must be real for chain schedules", j + 1, j + 2));
    c[j] = h.real();
  }
  return c;
}

}  // namespace

ControlSchedule chirp_schedule(int m, const SpectralGapStructure& s, const ScalarFn& u, const ScalarFn& phi) {
  const std::vector<double> c = chain_couplings(m, s);
  if (std::abs(u(0.0)) > 1e-12 || std::abs(u(1.0)) > 1e-12)
    throw ValidationError("chirp envelope must vanish at tau = 0 and tau = 1");
  if (std::abs(phi(0.0)) > 1e-14) throw ValidationError("chirp phase must vanish at tau = 0");

  ControlSchedule out;
  out.envelopes.envelopes.assign(s.size(), ScalarFn());
  for (int j = 0; j + 1 < m; ++j) out.envelopes.envelopes[*s.gap_of_link(j, j + 1)] = (1.0 / c[j]) * u;
  std::vector<ScalarFn> phases(s.dim());
  for (int j = 0; j < m; ++j) phases[j] = static_cast<double>(j + 1) * phi;
  out.phases = PhaseVector(std::move(phases));
  return out;
}

ControlSchedule stirap_schedule(int m, const SpectralGapStructure& s, std::span<const double> d,
                                const ScalarFn& u1, const ScalarFn& u2) {
  const std::vector<double> c = chain_couplings(m, s);
  if (static_cast<int>(d.size()) != m)
    throw ValidationError(fmt::format("detuning vector has {} entries, expected m = {}", d.size(), m));
  for (int j = 0; j + 1 < m; ++j)
    if (!(d[j + 1] > d[j])) throw ValidationError("detunings d_j must be strictly increasing");

  ControlSchedule out;
  out.envelopes.envelopes.assign(s.size(), ScalarFn());
  for (int j = 0; j + 1 < m; ++j) {
    // Link j (1-based j+1) carries u1 when odd, u2 when even.
    const ScalarFn& w = (j % 2 == 0) ? u1 : u2;
    out.envelopes.envelopes[*s.gap_of_link(j, j + 1)] = (1.0 / c[j]) * w;
  }
  std::vector<ScalarFn> phases(s.dim());
  for (int j = 0; j < m; ++j) phases[j] = ScalarFn::polynomial({0.0, -d[j]});
  out.phases = PhaseVector(std::move(phases));
  return out;
}

namespace {

struct Loop {
  ScalarFn u1;
  ScalarFn u2;
};

// u2 up on [a, t1], u1 up on [t1, mid], u2 down on [mid, t2], u1 down on [t2, b].
Loop make_loop(double a, double t1, double t2, double b, double peak1, double peak2) {
  const double mid = 0.5 * (t1 + t2);
  const ScalarFn one = ScalarFn::constant(1.0);
  Loop l;
  l.u2 = peak2 * (ScalarFn::smooth_step(a, t1) * (one - ScalarFn::smooth_step(mid, t2)));
  l.u1 = peak1 * (ScalarFn::smooth_step(t1, mid) * (one - ScalarFn::smooth_step(t2, b)));
  return l;
}

void check_path_args(double tau1, double tau2, double margin) {
  if (!(0.0 < tau1 && tau1 < tau2 && tau2 < 1.0))
    throw ValidationError(fmt::format("need 0 < tau1 < tau2 < 1, got tau1={}, tau2={}", tau1, tau2));
  if (!(margin > 1.0)) throw ValidationError("threshold margin must exceed 1");
}

}  // namespace

StirapPath stirap_path_odd(int m, const StirapThresholds& t, double tau1, double tau2, double margin) {
  if (m < 3 || m % 2 == 0) throw ValidationError(fmt::format("stirap_path_odd needs odd m >= 3, got {}", m));
  check_path_args(tau1, tau2, margin);
  if (!(t.w2_entry > 0.0) || !(t.w1_exit > 0.0))
    throw ConfigError("odd-m STIRAP path needs positive crossing thresholds on both axes");
  const double p1 = margin * t.w1_exit;
  const double p2 = margin * t.w2_entry;
  Loop l = make_loop(0.0, tau1, tau2, 1.0, p1, p2);
  return StirapPath{std::move(l.u1), std::move(l.u2), tau1, tau2, p1, p2};
}

StirapPath stirap_path_even(int m, const StirapThresholds& t, double tau1, double tau2, double margin) {
  if (m < 4 || m % 2 != 0) throw ValidationError(fmt::format("stirap_path_even needs even m >= 4, got {}", m));
  check_path_args(tau1, tau2, margin);
  if (!(t.w2_entry > 0.0) || !(t.w1_exit > 0.0) || !t.w2_star || !(*t.w2_star > 0.0))
    throw ConfigError("even-m STIRAP path needs w2_entry, w1_exit and w2_star");
  const double p1 = margin * t.w1_exit;
  const double p2 = margin * t.w2_entry;
  const double p2_star = margin * *t.w2_star;
  Loop first = make_loop(0.0, 0.5 * tau1, 0.5 * tau2, 0.5, p1, p2);
  Loop second = make_loop(0.5, 0.5 + 0.5 * tau1, 0.5 + 0.5 * tau2, 1.0, -p1, -p2_star);
  return StirapPath{first.u1 + second.u1, first.u2 + second.u2, tau1, tau2, p1, std::max(p2, p2_star)};
}

}  // namespace rwad
