#include "rwad/experiments/runners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "rwad/errors.hpp"
#include "rwad/experiments/expression.hpp"
#include "rwad/experiments/output.hpp"
#include "rwad/experiments/parallel.hpp"

namespace rwad::experiments {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

HermitianFamily reference_family(const ControlSchedule& schedule, SpectralGapStructure structure) {
  return [schedule, structure = std::move(structure)](double tau) {
    return hd_at(schedule.phases, schedule.envelopes, structure, tau);
  };
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Setup prepare(const ExperimentConfig& c, ScheduleKind kind) {
  Setup s;
  s.kind = kind;
  s.system = c.system.build();
  s.structure = spectral_gaps(s.system);
  const int m = c.levels;
  if (kind == ScheduleKind::chirp) {
    s.schedule = chirp_schedule(m, s.structure, parse_function(c.chirp.amplitude_text),
                                parse_function(c.chirp.phase_text));
    return s;
  }
  std::vector<double> d = c.stirap.detunings;
  if (d.empty())
    for (int j = 1; j <= m; ++j) d.push_back(j);
  s.w1_zero = eigen_intersections(d, Axis::w1_zero);
  s.w2_zero = eigen_intersections(d, Axis::w2_zero);
  s.thresholds = stirap_thresholds(*s.w1_zero, *s.w2_zero);
  s.path = m % 2 ? stirap_path_odd(m, *s.thresholds, c.stirap.tau1, c.stirap.tau2, c.stirap.margin)
                 : stirap_path_even(m, *s.thresholds, c.stirap.tau1, c.stirap.tau2, c.stirap.margin);
  s.schedule = stirap_schedule(m, s.structure, d, s.path->u1, s.path->u2);
  return s;
}

SynthesizedPulse make_pulse(const Setup& s, double epsilon, double alpha, bool subcritical) {
  return synthesize(s.structure, s.schedule.envelopes, s.schedule.phases, PulseParams(epsilon, alpha, subcritical));
}

CVec basis_state(int n, int level) {
  if (level < 1 || level > n) throw ValidationError(fmt::format("level {} outside 1..{}", level, n));
  CVec v = CVec::Zero(n);
  v[level - 1] = 1.0;
  return v;
}

TransferRun transfer_run(const ExperimentConfig& c, const Setup& s, double epsilon, double alpha, double delta) {
  const auto t0 = std::chrono::steady_clock::now();
  TransferRun r;
  r.epsilon = epsilon;
  r.alpha = alpha;
  r.delta = delta;
  const QuantumSystem sys = c.system.build(delta);
  const SpectralGapStructure structure = spectral_gaps(sys);
  const SynthesizedPulse pulse = make_pulse(s, epsilon, alpha, c.subcritical);
  const std::vector<double> grid = uniform_grid(c.grid_points);
  const CVec psi0 = basis_state(sys.dim(), c.initial_level);

  r.fast = c.frame == Frame::lab ? propagate_lab(sys, pulse, psi0, c.integrator, grid)
                                 : propagate_rotating(sys, pulse, psi0, c.integrator, grid);
  r.reference = adiabatic_reference(reference_family(s.schedule, structure), epsilon, psi0, grid, c.reference);
  r.error = flow_error(r.fast, r.reference, sys.energies, s.schedule.phases);
  r.final_populations = r.fast.populations(r.fast.size() - 1);
  r.target_population = r.final_populations[c.target_level - 1];
  r.target_phase = std::arg(r.fast.final_state()[c.target_level - 1]);
  for (std::size_t i = 0; i < r.fast.size(); ++i) {
    const RVec p = r.fast.populations(i);
    double inner = 0.0;
    for (int j = 1; j + 1 < c.levels; ++j) inner += p[j];
    r.max_intermediate = std::max(r.max_intermediate, inner);
  }
  r.seconds = seconds_since(t0);
  return r;
}

FrameAgreement frame_agreement(const ExperimentConfig& c, const Setup& s, double epsilon, double alpha) {
  FrameAgreement f;
  const SynthesizedPulse pulse = make_pulse(s, epsilon, alpha, c.subcritical);
  const std::vector<double> grid = uniform_grid(c.grid_points);
  const CVec psi0 = basis_state(s.system.dim(), c.initial_level);
  f.lab = propagate_lab(s.system, pulse, psi0, c.integrator, grid);
  f.rotating = propagate_rotating(s.system, pulse, psi0, c.integrator, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const UnitaryMatrix v = frame_phase(s.system.energies, s.schedule.phases, epsilon, alpha, grid[i]);
    f.sup_difference = std::max(f.sup_difference, (v.apply(f.rotating.states[i]) - f.lab.states[i]).norm());
  }
  return f;
}

int schedule_kappa(const ExperimentConfig& c, const Setup& s) {
  const EigenPaths paths = eigen_paths(reference_family(s.schedule, s.structure), uniform_grid(257));
  const auto kappa = minimal_kappa(paths, c.gap_floor);
  if (!kappa)
    throw NumericRefusal(fmt::format("the decoupled family satisfies no gap condition with kappa <= 4 (floor {})",
                                     c.gap_floor));
  return *kappa;
}

std::vector<RateSweep> rate_sweep(const ExperimentConfig& c, int threads) {
  const Setup s = prepare(c);
  const int kappa = schedule_kappa(c, s);
  std::vector<double> eps = c.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());

  std::vector<RatePoint> points(c.alphas.size() * eps.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    RatePoint& p = points[i];
    p.alpha = c.alphas[i / eps.size()];
    p.epsilon = eps[i % eps.size()];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const TransferRun r = transfer_run(c, s, p.epsilon, p.alpha);
      p.sup_error = r.error.sup_error;
      p.final_error = r.error.error.back();
      p.norm_drift = std::max(r.fast.max_norm_drift(), r.reference.max_norm_drift());
      p.steps = r.fast.stats.steps;
      if (p.norm_drift > c.checks.max_drift) {
        p.valid = false;
        p.warning = fmt::format("norm drift {:.3g} exceeds {:.3g}", p.norm_drift, c.checks.max_drift);
      }
    } catch (const NumericRefusal& e) {
      p.valid = false;
      p.sup_error = p.final_error = std::numeric_limits<double>::quiet_NaN();
      p.warning = e.what();
    }
    p.seconds = seconds_since(t0);
  });

  std::vector<RateSweep> out;
  for (std::size_t a = 0; a < c.alphas.size(); ++a) {
    RateSweep sw;
    sw.alpha = c.alphas[a];
    sw.kappa = kappa;
    sw.rate = std::min(1.0 / (kappa + 1), sw.alpha - 1.0);
    sw.points.assign(points.begin() + a * eps.size(), points.begin() + (a + 1) * eps.size());
    std::vector<double> x, y;
    const double floor = 100.0 * std::max(c.integrator.rel_tol, c.reference.rel_tol);
    bool all_floor = true;
    for (RatePoint& p : sw.points) {
      if (!p.valid) {
        sw.warnings.push_back(fmt::format("alpha {} eps {}: excluded, {}", p.alpha, p.epsilon, p.warning));
        continue;
      }
      if (p.sup_error > floor) all_floor = false;
      if (!(p.sup_error > 0.0)) {
        sw.warnings.push_back(fmt::format("alpha {} eps {}: zero error excluded from the fit", p.alpha, p.epsilon));
        continue;
      }
      x.push_back(p.epsilon);
      y.push_back(p.sup_error);
    }
    const std::size_t valid = std::count_if(sw.points.begin(), sw.points.end(), [](auto& p) { return p.valid; });
    if (valid < 3)
      throw NumericRefusal(fmt::format("rate sweep at alpha {} has {} valid points; at least 3 needed", sw.alpha, valid));
    if (!all_floor && x.size() >= 2) sw.slope = loglog_slope(x, y);
    out.push_back(std::move(sw));
  }
  return out;
}

EnsembleResult ensemble_sweep(const ExperimentConfig& c, int threads) {
  const Setup s = prepare(c);
  const std::vector<double> deltas = c.ensemble.deltas();
  EnsembleResult res;
  res.runs.resize(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t i) {
    res.runs[i] = transfer_run(c, s, c.epsilons.front(), c.alphas.front(), deltas[i]);
  });
  std::vector<double> errors;
  res.worst_transfer = 1.0;
  for (const TransferRun& r : res.runs) {
    EnsemblePoint p;
    p.delta = r.delta;
    p.target_population = r.target_population;
    p.sup_error = r.error.sup_error;
    p.final_error = r.error.error.back();
    p.min_fidelity = r.error.min_fidelity;
    p.norm_drift = std::max(r.fast.max_norm_drift(), r.reference.max_norm_drift());
    p.steps = r.fast.stats.steps;
    res.points.push_back(p);
    res.worst_transfer = std::min(res.worst_transfer, p.target_population);
    res.max_error = std::max(res.max_error, p.sup_error);
    errors.push_back(p.sup_error);
  }
  res.median_error = median(errors);
  res.error_ratio = res.median_error > 0.0 ? res.max_error / res.median_error
                                           : (res.max_error > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  return res;
}

std::vector<CrossingCase> crossing_cases(const ExperimentConfig& c, int threads) {
  std::vector<CrossingCase> out(c.crossings.sizes.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    CrossingCase& cc = out[i];
    cc.m = c.crossings.sizes[i];
    for (int j = 1; j <= cc.m; ++j) cc.detunings.push_back(j);
    cc.w1_zero = eigen_intersections(cc.detunings, Axis::w1_zero, c.crossings.w_max);
    cc.w2_zero = eigen_intersections(cc.detunings, Axis::w2_zero, c.crossings.w_max);
    for (const Crossing& x : cc.w1_zero.crossings) cc.probes_w1.push_back(conical_probe(cc.detunings, Axis::w1_zero, x));
    for (const Crossing& x : cc.w2_zero.crossings) cc.probes_w2.push_back(conical_probe(cc.detunings, Axis::w2_zero, x));
  });
  return out;
}

std::vector<OscillatoryResult> oscillatory_results(const ExperimentConfig& c, int threads) {
  std::vector<OscillatoryResult> out(c.cases.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const OscillatoryCase& oc = c.cases[i];
    out[i].name = oc.name;
    out[i].expected = oc.alpha + 1.0;
    out[i].order = oscillatory_order(oc.a, oc.h, oc.beta, oc.alpha, c.epsilons);
  });
  return out;
}

InvariantReport invariant_spot_check(const Setup& s, double epsilon, double alpha, bool subcritical,
                                     std::uint64_t seed) {
  InvariantReport r;
  CMat sum = CMat::Zero(s.system.dim(), s.system.dim());
  for (const CMat& part : s.structure.split_couplings) sum += part;
  r.split_sum_defect = (sum - s.system.coupling.matrix()).cwiseAbs().maxCoeff();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ScalarFn gauge = coeff(rng) * ScalarFn::identity() + coeff(rng) * ScalarFn::sin_affine(std::numbers::pi);
  std::vector<ScalarFn> shifted;
  for (int j = 0; j < s.schedule.phases.dim(); ++j) shifted.push_back(s.schedule.phases[j] + gauge);
  const PulseParams params(epsilon, alpha, subcritical);
  const SynthesizedPulse a = synthesize(s.structure, s.schedule.envelopes, s.schedule.phases, params);
  const SynthesizedPulse b = synthesize(s.structure, s.schedule.envelopes, PhaseVector(shifted), params);
  for (int i = 0; i < 64; ++i) {
    const double tau = unit(rng);
    for (std::size_t k = 0; k < a.carriers().size(); ++k) {
      const LevelPair p = a.carriers()[k].representative;
      const LevelPair q = b.carriers()[k].representative;
      const double pa = a.phases()[p.row](tau) - a.phases()[p.col](tau);
      const double pb = b.phases()[q.row](tau) - b.phases()[q.col](tau);
      r.gauge_defect = std::max(r.gauge_defect, std::abs(pa - pb));
      r.gauge_defect = std::max(r.gauge_defect, std::abs(a.carriers()[k].sigma - b.carriers()[k].sigma));
    }
    r.pulse_difference = std::max(r.pulse_difference, std::abs(a.normalized_at_tau(tau) - b.normalized_at_tau(tau)));
  }

  std::vector<double> taus(64);
  for (double& t : taus) t = unit(rng);
  for (std::size_t g = 0; g < s.structure.size(); ++g) {
    for (std::size_t pick = 1; pick < s.structure.resonance_sets[g].size(); ++pick) {
      std::vector<std::size_t> reps(s.structure.size(), 0);
      reps[g] = pick;
      const SynthesizedPulse c = synthesize(s.structure, s.schedule.envelopes, s.schedule.phases, params, reps);
      for (double tau : taus)
        r.representative_difference =
            std::max(r.representative_difference, std::abs(a.normalized_at_tau(tau) - c.normalized_at_tau(tau)));
    }
  }
  return r;
}

bool RunReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

namespace {

using nlohmann::json;

std::string tag(double v) { return fmt::format("{:g}", v); }

json stats_json(const Trajectory& t) {
  return {{"frame", frame_name(t.frame)},
          {"method", method_name(t.settings.method)},
          {"rho", t.settings.rho},
          {"max_step", t.settings.max_step},
          {"step", t.step},
          {"omega_max", t.omega_max},
          {"steps", t.stats.steps},
          {"rejected", t.stats.rejected},
          {"matvecs", t.stats.matvecs},
          {"generator_evals", t.stats.generator_evals},
          {"smallest_step", t.stats.steps ? t.stats.smallest_step : 0.0},
          {"largest_step", t.stats.largest_step},
          {"norm_drift", t.max_norm_drift()},
          {"population_defect", t.max_population_defect()}};
}

std::vector<double> to_vector(const RVec& v) { return {v.data(), v.data() + v.size()}; }

class Artifacts {
 public:
  Artifacts(const ExperimentConfig& c, const RunOptions& o, RunReport& r) : c_(c), o_(o), r_(r) {}

  void write(const std::string& file, const std::string& content) {
    const auto path = o_.out_dir / file;
    if (o_.write) write_file(path, content);
    r_.files.push_back(path);
  }

  void svg(const std::string& file, const PlotSpec& spec, const std::vector<Series>& series) {
    PlotSpec s = spec;
    s.width = c_.svg_width;
    s.height = c_.svg_height;
    write(file, render_svg(s, series));
  }

  void check(std::string name, bool passed, std::string detail) {
    r_.checks.push_back({std::move(name), passed, std::move(detail)});
  }

  // Norm and population-sum invariants for every propagation of a run.
  void check_trajectories(const std::string& label, std::initializer_list<const Trajectory*> trs) {
    double drift = 0.0, defect = 0.0;
    for (const Trajectory* t : trs) {
      drift = std::max(drift, t->max_norm_drift());
      defect = std::max(defect, t->max_population_defect());
    }
    check(label + ": norm drift", drift <= c_.checks.max_drift,
          fmt::format("{:.3e} <= {:.1e}", drift, c_.checks.max_drift));
    check(label + ": population sums", defect <= c_.checks.max_drift,
          fmt::format("{:.3e} <= {:.1e}", defect, c_.checks.max_drift));
  }

  void check_invariants(const Setup& s, double eps, double alpha, json& out) {
    const InvariantReport inv = invariant_spot_check(s, eps, alpha, c_.subcritical, c_.seed);
    out["invariants"] = {{"split_sum_defect", inv.split_sum_defect},
                         {"gauge_defect", inv.gauge_defect},
                         {"gauge_pulse_difference", inv.pulse_difference},
                         {"representative_difference", inv.representative_difference}};
    check("split couplings sum to H1", inv.split_sum_defect == 0.0, fmt::format("{:.3e}", inv.split_sum_defect));
    const double worst = std::max(inv.gauge_defect, inv.representative_difference);
    check("gauge independence", worst <= 1e-12, fmt::format("{:.3e} <= 1e-12", worst));
  }

 private:
  const ExperimentConfig& c_;
  const RunOptions& o_;
  RunReport& r_;
};

void controls_plot(Artifacts& out, const ExperimentConfig& c, const Setup& s) {
  std::vector<Series> series;
  const std::vector<double> grid = uniform_grid(401);
  if (s.kind == ScheduleKind::stirap) {
    Series u1{"u1"}, u2{"u2"};
    for (double t : grid) {
      u1.x.push_back(t);
      u1.y.push_back(s.path->u1(t));
      u2.x.push_back(t);
      u2.y.push_back(s.path->u2(t));
    }
    series = {u1, u2};
  } else {
    const ScalarFn u = parse_function(c.chirp.amplitude_text);
    const ScalarFn phi = parse_function(c.chirp.phase_text);
    Series su{"u"}, sd{"-phi'"};
    for (double t : grid) {
      su.x.push_back(t);
      su.y.push_back(u(t));
      sd.x.push_back(t);
      sd.y.push_back(-phi.derivative(t));
    }
    series = {su, sd};
  }
  out.svg(c.name + "_controls.svg", {.title = fmt::format("{} controls", schedule_name(s.kind)), .x_label = "tau",
                                     .y_label = "value"},
          series);
}

json transfer_json(const TransferRun& r) {
  return {{"epsilon", r.epsilon},
          {"alpha", r.alpha},
          {"delta", r.delta},
          {"final_populations", to_vector(r.final_populations)},
          {"target_population", r.target_population},
          {"target_phase", r.target_phase},
          {"max_intermediate", r.max_intermediate},
          {"sup_error", r.error.sup_error},
          {"final_error", r.error.error.back()},
          {"min_fidelity", r.error.min_fidelity},
          {"integrator", stats_json(r.fast)},
          {"reference_integrator", stats_json(r.reference)},
          {"wall_seconds", r.seconds}};
}

void write_transfer(Artifacts& out, const ExperimentConfig& c, const TransferRun& r, const std::string& stem) {
  std::ostringstream traj;
  r.fast.write_csv(traj);
  out.write(stem + "_trajectory.csv", traj.str());

  const int n = static_cast<int>(r.reference.final_state().size());
  std::vector<std::string> header{"tau", "error", "fidelity"};
  for (int j = 1; j <= n; ++j) header.push_back(fmt::format("ref_p_{}", j));
  CsvTable err(header);
  for (std::size_t i = 0; i < r.error.tau.size(); ++i) {
    std::vector<CsvTable::Cell> row{r.error.tau[i], r.error.error[i], r.error.fidelity[i]};
    const RVec p = r.reference.populations(i);
    for (int j = 0; j < n; ++j) row.emplace_back(p[j]);
    err.add_row(std::move(row));
  }
  out.write(stem + "_error.csv", err.str());

  std::vector<Series> pops;
  for (int j = 0; j < n; ++j) {
    Series s{fmt::format("p_{}", j + 1)};
    for (std::size_t i = 0; i < r.fast.size(); ++i) {
      s.x.push_back(r.fast.tau[i]);
      s.y.push_back(r.fast.populations(i)[j]);
    }
    pops.push_back(std::move(s));
  }
  out.svg(stem + "_populations.svg",
          {.title = fmt::format("{} populations, eps = {:g}, alpha = {:g}", c.name, r.epsilon, r.alpha),
           .x_label = "tau",
           .y_label = "population",
           .y_range = std::pair{-0.02, 1.02}},
          pops);

  Series e{"||psi - V Psi_hat||"};
  for (std::size_t i = 0; i < r.error.tau.size(); ++i) {
    e.x.push_back(r.error.tau[i]);
    e.y.push_back(r.error.error[i]);
  }
  out.svg(stem + "_error.svg", {.title = fmt::format("{} deviation from the decoupled flow", c.name),
                                .x_label = "tau", .y_label = "error", .log_y = true},
          {e});
}

void run_transfer_kind(const ExperimentConfig& c, const RunOptions& o, RunReport& report, Artifacts& out) {
  const Setup s = prepare(c);
  const double eps = c.epsilons.front();
  std::vector<TransferRun> runs(c.alphas.size());
  parallel_for(runs.size(), o.threads, [&](std::size_t i) { runs[i] = transfer_run(c, s, eps, c.alphas[i]); });

  json& sum = report.summary;
  sum["runs"] = json::array();
  for (const TransferRun& r : runs) {
    const std::string stem = fmt::format("{}_alpha{}", c.name, tag(r.alpha));
    write_transfer(out, c, r, stem);
    sum["runs"].push_back(transfer_json(r));
    out.check_trajectories(fmt::format("alpha {:g}", r.alpha), {&r.fast, &r.reference});
  }
  controls_plot(out, c, s);
  out.check_invariants(s, eps, c.alphas.front(), sum);
  if (s.thresholds) {
    sum["thresholds"] = {{"w2_entry", s.thresholds->w2_entry}, {"w1_exit", s.thresholds->w1_exit}};
    if (s.thresholds->w2_star) sum["thresholds"]["w2_star"] = *s.thresholds->w2_star;
    sum["path"] = {{"tau1", s.path->tau1}, {"tau2", s.path->tau2}, {"peak_u1", s.path->peak_u1},
                   {"peak_u2", s.path->peak_u2}, {"margin", c.stirap.margin}};
  }

  const TransferRun& first = runs.front();
  if (c.checks.min_transfer)
    out.check(fmt::format("final p_{} at alpha {:g}", c.target_level, first.alpha),
              first.target_population >= *c.checks.min_transfer,
              fmt::format("{:.4f} >= {:.4f}", first.target_population, *c.checks.min_transfer));
  if (c.checks.min_drop && runs.size() >= 2) {
    const double drop = first.target_population - runs[1].target_population;
    out.check(fmt::format("transfer drop from alpha {:g} to {:g}", first.alpha, runs[1].alpha),
              drop >= *c.checks.min_drop, fmt::format("{:.4f} >= {:.4f}", drop, *c.checks.min_drop));
  }
  if (c.checks.compare_chirp && s.kind == ScheduleKind::stirap) {
    const Setup chirp = prepare(c, ScheduleKind::chirp);
    const TransferRun cr = transfer_run(c, chirp, eps, first.alpha);
    sum["chirp_comparison"] = transfer_json(cr);
    out.check_trajectories("chirp comparison", {&cr.fast, &cr.reference});
    out.check("intermediate population below the chirp run", first.max_intermediate < cr.max_intermediate,
              fmt::format("{:.4f} < {:.4f}", first.max_intermediate, cr.max_intermediate));
  }
}

void run_rate(const ExperimentConfig& c, const RunOptions& o, RunReport& report, Artifacts& out) {
  const auto sweeps = rate_sweep(c, o.threads);
  CsvTable table({"alpha", "epsilon", "sup_error", "final_error", "steps", "norm_drift", "valid"});
  std::vector<Series> series;
  json& sum = report.summary;
  sum["sweeps"] = json::array();
  for (const RateSweep& sw : sweeps) {
    Series data{fmt::format("alpha {:g}", sw.alpha)};
    data.markers = true;
    json pts = json::array();
    for (const RatePoint& p : sw.points) {
      table.add_row({p.alpha, p.epsilon, p.sup_error, p.final_error, p.steps, p.norm_drift, p.valid ? "1" : "0"});
      if (p.valid) {
        data.x.push_back(p.epsilon);
        data.y.push_back(p.sup_error);
      }
      pts.push_back({{"epsilon", p.epsilon}, {"sup_error", p.sup_error}, {"final_error", p.final_error},
                     {"steps", p.steps}, {"norm_drift", p.norm_drift}, {"valid", p.valid},
                     {"wall_seconds", p.seconds}});
    }
    series.push_back(data);
    json js = {{"alpha", sw.alpha}, {"kappa", sw.kappa}, {"rate", sw.rate}, {"points", pts}, {"warnings", sw.warnings}};
    js["slope"] = sw.slope ? json(*sw.slope) : json("not applicable");
    sum["sweeps"].push_back(js);

    if (sw.slope && !data.x.empty()) {
      // Fitted line through the geometric mean of the data.
      double lx = 0.0, ly = 0.0;
      for (std::size_t i = 0; i < data.x.size(); ++i) {
        lx += std::log(data.x[i]);
        ly += std::log(data.y[i]);
      }
      lx /= data.x.size();
      ly /= data.y.size();
      Series fit{fmt::format("slope {:.2f}", *sw.slope)};
      fit.dashed = true;
      fit.color = "#555555";
      for (double e : {data.x.front(), data.x.back()}) {
        fit.x.push_back(e);
        fit.y.push_back(std::exp(ly + *sw.slope * (std::log(e) - lx)));
      }
      series.push_back(fit);
    }

    if (!sw.slope) {
      out.check(fmt::format("rate at alpha {:g}", sw.alpha), true, "errors at the quadrature floor; slope not applicable");
    } else if (c.checks.two_sided_slope) {
      out.check(fmt::format("slope at alpha {:g}", sw.alpha), std::abs(*sw.slope - sw.rate) <= c.checks.slope_tolerance,
                fmt::format("|{:.3f} - {:.3f}| <= {:.2f}", *sw.slope, sw.rate, c.checks.slope_tolerance));
    } else {
      out.check(fmt::format("slope at alpha {:g}", sw.alpha), *sw.slope >= sw.rate - c.checks.slope_tolerance,
                fmt::format("{:.3f} >= {:.3f} - {:.2f}", *sw.slope, sw.rate, c.checks.slope_tolerance));
    }
    for (const RatePoint& p : sw.points)
      if (p.valid && p.norm_drift > c.checks.max_drift) out.check("norm drift", false, p.warning);
  }
  out.write(c.name + "_rate.csv", table.str());
  out.svg(c.name + "_rate.svg", {.title = "sup error against epsilon", .x_label = "epsilon", .y_label = "sup error",
                                 .log_x = true, .log_y = true},
          series);
  const Setup s = prepare(c);
  out.check_invariants(s, c.epsilons.front(), c.alphas.front(), sum);
}

void run_ensemble(const ExperimentConfig& c, const RunOptions& o, RunReport& report, Artifacts& out) {
  const EnsembleResult res = ensemble_sweep(c, o.threads);
  CsvTable table({"delta", "target_population", "sup_error", "final_error", "min_fidelity", "norm_drift", "steps"});
  Series transfer{fmt::format("p_{}(1)", c.target_level)}, error{"sup error"};
  transfer.markers = error.markers = true;
  json pts = json::array();
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const EnsemblePoint& p = res.points[i];
    table.add_row({p.delta, p.target_population, p.sup_error, p.final_error, p.min_fidelity, p.norm_drift, p.steps});
    transfer.x.push_back(p.delta);
    transfer.y.push_back(p.target_population);
    error.x.push_back(p.delta);
    error.y.push_back(p.sup_error);
    json j = transfer_json(res.runs[i]);
    pts.push_back(j);
    out.check_trajectories(fmt::format("delta {:g}", p.delta), {&res.runs[i].fast, &res.runs[i].reference});
  }
  out.write(c.name + "_ensemble.csv", table.str());
  out.svg(c.name + "_transfer.svg", {.title = "final transfer across the ensemble", .x_label = "delta",
                                     .y_label = "population", .y_range = std::pair{0.0, 1.02}},
          {transfer});
  out.svg(c.name + "_error.svg", {.title = "sup error across the ensemble", .x_label = "delta", .y_label = "sup error"},
          {error});
  json& sum = report.summary;
  sum["points"] = pts;
  sum["worst_transfer"] = res.worst_transfer;
  sum["worst_infidelity"] = 1.0 - res.worst_transfer;
  sum["max_error"] = res.max_error;
  sum["median_error"] = res.median_error;
  sum["error_ratio"] = res.error_ratio;
  const Setup s = prepare(c);
  out.check_invariants(s, c.epsilons.front(), c.alphas.front(), sum);
  if (c.checks.min_transfer)
    out.check("worst-case transfer", res.worst_transfer >= *c.checks.min_transfer,
              fmt::format("{:.4f} >= {:.4f}", res.worst_transfer, *c.checks.min_transfer));
  if (c.checks.max_error_ratio)
    out.check("max over median error", res.error_ratio <= *c.checks.max_error_ratio,
              fmt::format("{:.3f} <= {:.2f}", res.error_ratio, *c.checks.max_error_ratio));
}

void crossing_plot(Artifacts& out, const ExperimentConfig& c, const CrossingCase& cc, const CrossingReport& rep) {
  const int m = cc.m;
  std::vector<Series> series(m);
  for (int j = 0; j < m; ++j) series[j].label = fmt::format("lambda_{}", j + 1);
  for (int i = 0; i < c.crossings.plot_points; ++i) {
    const double w = rep.w_max * i / (c.crossings.plot_points - 1);
    const HermitianMatrix h = rep.axis == Axis::w1_zero ? stirap_hamiltonian(cc.detunings, 0.0, w)
                                                        : stirap_hamiltonian(cc.detunings, w, 0.0);
    const RVec ev = eigh(h).values;
    for (int j = 0; j < m; ++j) {
      series[j].x.push_back(w);
      series[j].y.push_back(ev[j]);
    }
  }
  Series marks{"crossings"};
  marks.line = false;
  marks.markers = true;
  marks.color = "#000000";
  for (const Crossing& x : rep.crossings) {
    const HermitianMatrix h = rep.axis == Axis::w1_zero ? stirap_hamiltonian(cc.detunings, 0.0, x.location)
                                                        : stirap_hamiltonian(cc.detunings, x.location, 0.0);
    marks.x.push_back(x.location);
    marks.y.push_back(eigh(h).values[x.k - 1]);
  }
  series.push_back(marks);
  const std::string axis(axis_name(rep.axis));
  out.svg(fmt::format("{}_m{}_{}.svg", c.name, m, axis),
          {.title = fmt::format("eigenvalues of H_S along {}, m = {}", axis, m),
           .x_label = rep.axis == Axis::w1_zero ? "w2" : "w1",
           .y_label = "eigenvalue"},
          series);
}

void run_crossings(const ExperimentConfig& c, const RunOptions& o, RunReport& report, Artifacts& out) {
  const auto cases = crossing_cases(c, o.threads);
  CsvTable table({"m", "axis", "k", "location", "slope", "residual", "bracket", "star", "gap_ratio"});
  json arr = json::array();
  for (const CrossingCase& cc : cases) {
    for (const CrossingReport* rep : {&cc.w1_zero, &cc.w2_zero}) {
      const auto& probes = rep == &cc.w1_zero ? cc.probes_w1 : cc.probes_w2;
      json xs = json::array();
      double worst_residual = 0.0;
      for (std::size_t i = 0; i < rep->crossings.size(); ++i) {
        const Crossing& x = rep->crossings[i];
        table.add_row({cc.m, std::string(axis_name(rep->axis)), x.k, x.location, x.slope, x.residual, x.bracket,
                       x.star ? "1" : "0", probes[i].max_ratio});
        xs.push_back({{"k", x.k}, {"location", x.location}, {"slope", x.slope}, {"residual", x.residual},
                      {"star", x.star}, {"gap_ratio_min", probes[i].min_ratio},
                      {"gap_ratio_max", probes[i].max_ratio}, {"conical", probes[i].conical}});
        worst_residual = std::max(worst_residual, x.residual);
      }
      json j = {{"m", cc.m},           {"axis", axis_name(rep->axis)},   {"crossings", xs},
                {"expected", rep->expected}, {"counts_match", rep->counts_match}, {"monotone", rep->monotone},
                {"isolated", rep->isolated}, {"min_isolation_gap", rep->min_isolation_gap},
                {"w_max", rep->w_max},   {"notes", rep->notes}};
      if (rep->top_pair_separated) j["top_pair_separated"] = *rep->top_pair_separated;
      arr.push_back(j);
      const std::string label = fmt::format("m = {} along {}", cc.m, axis_name(rep->axis));
      const auto regular = std::count_if(rep->crossings.begin(), rep->crossings.end(), [](auto& x) { return !x.star; });
      out.check(label + ": crossing count", rep->counts_match,
                fmt::format("{} found, {} expected{}", regular, rep->expected,
                            regular < static_cast<long>(rep->crossings.size()) ? ", plus w2*" : ""));
      out.check(label + ": monotone", rep->monotone, rep->monotone ? "yes" : "no");
      out.check(label + ": residual", worst_residual <= c.checks.max_residual,
                fmt::format("{:.2e} <= {:.1e}", worst_residual, c.checks.max_residual));
      crossing_plot(out, c, cc, *rep);
    }
  }
  out.write(c.name + "_crossings.csv", table.str());
  report.summary["cases"] = arr;
}

void run_oscillatory(const ExperimentConfig& c, const RunOptions& o, RunReport& report, Artifacts& out) {
  const auto results = oscillatory_results(c, o.threads);
  CsvTable table({"case", "epsilon", "sup"});
  std::vector<Series> series;
  json arr = json::array();
  for (const OscillatoryResult& r : results) {
    Series s{r.name};
    s.markers = true;
    for (std::size_t i = 0; i < r.order.epsilons.size(); ++i) {
      table.add_row({r.name, r.order.epsilons[i], r.order.sups[i]});
      s.x.push_back(r.order.epsilons[i]);
      s.y.push_back(r.order.sups[i]);
    }
    series.push_back(s);
    const bool finite = std::isfinite(r.order.slope);
    json j = {{"case", r.name}, {"expected_order", r.expected}, {"epsilons", r.order.epsilons}, {"sups", r.order.sups}};
    j["slope"] = finite ? json(r.order.slope) : json("infinite");
    arr.push_back(j);
    out.check(fmt::format("decay order of {}", r.name), !finite || r.order.slope >= r.expected - c.checks.slope_margin,
              finite ? fmt::format("{:.3f} >= {:.3f} - {:.2f}", r.order.slope, r.expected, c.checks.slope_margin)
                     : "integrand vanishes");
  }
  out.write(c.name + "_oscillatory.csv", table.str());
  out.svg(c.name + "_oscillatory.svg", {.title = "sup of the oscillatory integral", .x_label = "epsilon",
                                        .y_label = "sup", .log_x = true, .log_y = true},
          series);
  report.summary["cases"] = arr;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& c, const RunOptions& options) {
  if (c.long_run && !options.allow_long)
    throw ConfigError(fmt::format("experiment '{}' is marked long; pass --long to run it", c.name));
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  Artifacts out(c, options, report);
  json& sum = report.summary;
  sum["name"] = c.name;
  sum["kind"] = kind_name(c.kind);
  sum["seed"] = c.seed;
  if (c.system.dim() > 0) {
    sum["energies"] = c.system.energies;
    sum["levels"] = c.levels;
    sum["schedule"] = schedule_name(c.schedule);
  }
  sum["epsilon"] = c.epsilons;
  sum["alpha"] = c.alphas;

  switch (c.kind) {
    case Kind::chirp:
    case Kind::stirap: run_transfer_kind(c, options, report, out); break;
    case Kind::rate_sweep: run_rate(c, options, report, out); break;
    case Kind::ensemble_sweep: run_ensemble(c, options, report, out); break;
    case Kind::crossings: run_crossings(c, options, report, out); break;
    case Kind::oscillatory_order: run_oscillatory(c, options, report, out); break;
  }

  sum["checks"] = json::array();
  for (const Check& ch : report.checks)
    sum["checks"].push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
  sum["all_checks_passed"] = report.all_passed();
  sum["wall_seconds"] = seconds_since(t0);
  out.write("summary.json", sum.dump(2) + "\n");
  return report;
}

}  // namespace rwad::experiments
