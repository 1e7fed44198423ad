#pragma once

// Experiment configuration: flat key-value files with [section] headers,
// comma-separated lists, and `;` or `#` comments. docs/config_schema.ini
// documents every key; `simctl schema` prints it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rwad/magnus.hpp"
#include "rwad/model.hpp"
#include "rwad/propagate.hpp"
#include "rwad/scalar_fn.hpp"

namespace rwad::experiments {

enum class Kind { chirp, stirap, rate_sweep, ensemble_sweep, crossings, oscillatory_order };
enum class ScheduleKind { chirp, stirap };

std::string_view kind_name(Kind k);
std::optional<Kind> parse_kind(std::string_view s);
std::string_view schedule_name(ScheduleKind k);

struct SystemSpec {
  std::vector<double> energies;
  CMat coupling;

  int dim() const { return static_cast<int>(energies.size()); }
  /// The system with coupling delta * H1.
  QuantumSystem build(double delta = 1.0) const;
};

struct ChirpSpec {
  std::string amplitude_text = "4*sin(pi*tau)";
  std::string phase_text = "-(2/pi)*sin(pi*tau)";
  ScalarFn amplitude;
  ScalarFn phase;
};

struct StirapSpec {
  std::vector<double> detunings;  // defaults to 1..m
  double tau1 = 0.3;
  double tau2 = 0.7;
  double margin = 1.6;
};

struct EnsembleSpec {
  double delta_min = 0.8;
  double delta_max = 1.2;
  int samples = 9;

  /// Uniform samples of [delta_min, delta_max], endpoints included.
  std::vector<double> deltas() const;
};

struct CrossingsSpec {
  std::vector<int> sizes{3, 4, 5, 6, 7};
  /// Scan range along each axis; 0 selects 4 (d_m - d_1).
  double w_max = 0.0;
  /// Samples per eigenvalue curve in the plots.
  int plot_points = 400;
};

struct OscillatoryCase {
  std::string name;
  std::string a_text;
  std::string h_text;
  ScalarFn a;
  ScalarFn h;
  double beta = 1.0;
  double alpha = 1.0;
};

struct CheckSpec {
  std::optional<double> min_transfer;
  std::optional<double> min_drop;
  bool compare_chirp = false;
  double slope_tolerance = 0.25;
  /// true: |slope - rate| <= tolerance; false: slope >= rate - tolerance.
  bool two_sided_slope = true;
  std::optional<double> max_error_ratio;
  double max_residual = 1e-9;
  double slope_margin = 0.3;
  double max_drift = 1e-8;
};

struct ExperimentConfig {
  Kind kind = Kind::chirp;
  std::string name = "run";
  std::uint64_t seed = 1;
  /// Runs that need `--long`.
  bool long_run = false;

  SystemSpec system;
  int levels = 0;        // m: the schedule drives levels 1..m
  int initial_level = 1;  // 1-based
  int target_level = 0;   // 1-based, defaults to m
  ScheduleKind schedule = ScheduleKind::chirp;
  ChirpSpec chirp;
  StirapSpec stirap;

  std::vector<double> epsilons{0.01};
  std::vector<double> alphas{1.2};
  bool subcritical = false;

  Frame frame = Frame::lab;
  IntegratorSettings integrator;
  IntegratorSettings reference{Method::magnus4, 0.0, 1e-10, 20.0};

  int grid_points = 512;
  int svg_width = 960;
  int svg_height = 600;
  std::filesystem::path out_dir = "out";

  EnsembleSpec ensemble;
  CrossingsSpec crossings;
  std::vector<OscillatoryCase> cases;
  /// Smallest admissible gap when determining kappa.
  double gap_floor = 1e-3;

  CheckSpec checks;
};

/// Reads a config file. Relative paths inside it resolve against its directory.
ExperimentConfig load_config(const std::filesystem::path& file);

/// Parses config text. Throws ConfigError on unknown sections or keys,
/// malformed values, or missing kind-specific keys.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// Comma-separated doubles.
std::vector<double> parse_list(std::string_view text, std::string_view key);

}  // namespace rwad::experiments
