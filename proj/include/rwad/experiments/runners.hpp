#pragma once

// Experiment pipelines: schedule construction, transfer runs against the
// decoupled reference, rate and ensemble sweeps, crossing and oscillatory
// reports, and the artifact writer behind `simctl run`.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rwad/experiments/config.hpp"
#include "rwad/propagate.hpp"
#include "rwad/pulses.hpp"
#include "rwad/spectral.hpp"

namespace rwad::experiments {

/// Nominal system, its gap structure and the control schedule built from it.
struct Setup {
  ScheduleKind kind = ScheduleKind::chirp;
  QuantumSystem system;
  SpectralGapStructure structure;
  ControlSchedule schedule;
  std::optional<CrossingReport> w1_zero;
  std::optional<CrossingReport> w2_zero;
  std::optional<StirapThresholds> thresholds;
  std::optional<StirapPath> path;
};

Setup prepare(const ExperimentConfig& c, ScheduleKind kind);
inline Setup prepare(const ExperimentConfig& c) { return prepare(c, c.schedule); }

SynthesizedPulse make_pulse(const Setup& s, double epsilon, double alpha, bool subcritical);

/// e_{level}, 1-based.
CVec basis_state(int n, int level);

struct TransferRun {
  double epsilon = 0.0;
  double alpha = 0.0;
  double delta = 1.0;
  Trajectory fast;
  Trajectory reference;
  FlowError error;
  RVec final_populations;
  double target_population = 0.0;
  /// arg of the final target amplitude.
  double target_phase = 0.0;
  /// max over tau of the population strictly between the first and last driven level.
  double max_intermediate = 0.0;
  double seconds = 0.0;
};

/// Propagates the system with coupling delta * H1 under the pulse built from
/// the nominal system, and the reference flow of h_d for that coupling.
TransferRun transfer_run(const ExperimentConfig& c, const Setup& s, double epsilon, double alpha,
                         double delta = 1.0);

/// sup over the grid of || psi_lab - V_eps Psi_rot ||.
struct FrameAgreement {
  double sup_difference = 0.0;
  Trajectory lab;
  Trajectory rotating;
};
FrameAgreement frame_agreement(const ExperimentConfig& c, const Setup& s, double epsilon, double alpha);

struct RatePoint {
  double alpha = 0.0;
  double epsilon = 0.0;
  double sup_error = 0.0;
  double final_error = 0.0;
  double norm_drift = 0.0;
  long long steps = 0;
  bool valid = true;
  std::string warning;
  double seconds = 0.0;
};

struct RateSweep {
  double alpha = 0.0;
  int kappa = 0;
  /// min(1/(kappa+1), alpha-1)
  double rate = 0.0;
  std::vector<RatePoint> points;  // sorted by epsilon, descending
  /// Absent when every error sits at the integration floor, 100 times the
  /// larger local tolerance.
  std::optional<double> slope;
  std::vector<std::string> warnings;
};

/// Smallest kappa for which the gap condition holds on the reference family.
int schedule_kappa(const ExperimentConfig& c, const Setup& s);

/// One sweep per alpha, points evaluated on `threads` workers.
std::vector<RateSweep> rate_sweep(const ExperimentConfig& c, int threads);

struct EnsemblePoint {
  double delta = 0.0;
  double target_population = 0.0;
  double sup_error = 0.0;
  double final_error = 0.0;
  double min_fidelity = 1.0;
  double norm_drift = 0.0;
  long long steps = 0;
};

struct EnsembleResult {
  std::vector<EnsemblePoint> points;  // sorted by delta
  double worst_transfer = 0.0;
  double max_error = 0.0;
  double median_error = 0.0;
  double error_ratio = 0.0;
  std::vector<TransferRun> runs;
};

EnsembleResult ensemble_sweep(const ExperimentConfig& c, int threads);

struct CrossingCase {
  int m = 0;
  std::vector<double> detunings;
  CrossingReport w1_zero;
  CrossingReport w2_zero;
  std::vector<ConicalProbe> probes_w1;
  std::vector<ConicalProbe> probes_w2;
};

std::vector<CrossingCase> crossing_cases(const ExperimentConfig& c, int threads);

struct OscillatoryResult {
  std::string name;
  double expected = 0.0;  // alpha + 1
  OscillatoryOrder order;
};

std::vector<OscillatoryResult> oscillatory_results(const ExperimentConfig& c, int threads);

/// Spot checks of structural invariants, at tau samples drawn from `seed`.
struct InvariantReport {
  /// max |sum_sigma H1^sigma - H1|
  double split_sum_defect = 0.0;
  /// Largest change of a carrier frequency or carrier phase phihat_sigma when
  /// every phase gets the same extra gauge term.
  double gauge_defect = 0.0;
  /// max |u_eps - u_eps'| / eps^alpha for the same change. Rounding of the
  /// shifted phase differences, divided by eps, keeps this near 1e-12 for
  /// eps = 0.01, so it is reported but not checked.
  double pulse_difference = 0.0;
  /// max |u_eps - u_eps'| / eps^alpha over every alternative representative
  /// pair of every resonant gap.
  double representative_difference = 0.0;
};
InvariantReport invariant_spot_check(const Setup& s, double epsilon, double alpha, bool subcritical,
                                     std::uint64_t seed);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunOptions {
  std::filesystem::path out_dir;
  int threads = 1;
  bool allow_long = false;
  bool write = true;
};

struct RunReport {
  nlohmann::json summary;
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;

  bool all_passed() const;
};

/// Runs the configured experiment, writes CSV, SVG and summary.json into
/// options.out_dir, and evaluates the [check] thresholds.
RunReport run_experiment(const ExperimentConfig& c, const RunOptions& options);

}  // namespace rwad::experiments
