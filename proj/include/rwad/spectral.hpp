#pragma once

// Eigenvalue path tracking for Hermitian families, gap conditions, the
// tridiagonal simplicity check, STIRAP eigenvalue crossings, and decay
// orders of oscillatory integrals.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwad/linalg.hpp"
#include "rwad/pulses.hpp"
#include "rwad/scalar_fn.hpp"

namespace rwad {

using HermitianFamily = std::function<HermitianMatrix(double)>;

/// Eigenpairs of a family tracked along a grid by eigenvector overlap.
/// Column j of frames[i] is the eigenvector of values[i][j]; consecutive
/// frames satisfy <v_j(tau_i), v_j(tau_{i+1})> >= 0.
struct EigenPaths {
  HermitianFamily family;
  std::vector<double> grid;
  std::vector<RVec> values;
  std::vector<CMat> frames;
  /// Smallest matched overlap |<v_j(tau_i), v_j(tau_{i+1})>|.
  double certificate = 1.0;
  /// Grid points inserted by refinement.
  int inserted = 0;

  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
  std::size_t size() const { return grid.size(); }
};

inline constexpr double kCertificateRefine = 0.9;
inline constexpr double kCertificateRefuse = 0.5;
inline constexpr int kMaxRefineDepth = 12;

/// Tracks all eigenpairs of `family` on `grid` (ascending). Intervals whose
/// overlap falls below 0.9 are bisected up to depth 12; a final overlap
/// below 0.5 is refused with its location.
EigenPaths eigen_paths(const HermitianFamily& family, std::span<const double> grid);

/// Eigenpairs of paths.family at tau, ordered and rephased to continue the
/// tracked frame at the nearest grid point at or below tau.
Eigensystem aligned_eigensystem(const EigenPaths& paths, double tau);

struct NearContact {
  double tau = 0.0;
  int first = 0;   // tracked curve indices
  int second = 0;
  double gap = 0.0;
  /// d^r/dtau^r (lambda_second - lambda_first) for r = 1..kappa at tau.
  std::vector<double> derivatives;
  /// Lowest order r <= kappa with a nonzero derivative, 0 if none.
  int witness_order = 0;
  bool third_party_separated = true;
};

struct GapReport {
  bool holds_gap = false;
  /// min over the grid and all pairs of |lambda_j - lambda_l|.
  double gap_estimate = 0.0;
  double gap_location = 0.0;
  int kappa = 0;
  bool holds_kappa_gap = false;
  std::vector<NearContact> contacts;
};

/// GAP holds iff the smallest pairwise gap on the grid is >= c_floor.
/// Grid points where a tracked pair comes within c_floor are contacts; at
/// each, finite differences of order-matched accuracy (kappa + 2) witness a
/// nonzero derivative of order <= kappa. Refuses when the grid has fewer
/// points than the stencil needs.
GapReport gap_condition(const EigenPaths& paths, int kappa, double c_floor);

/// Smallest kappa in [0, max_kappa] for which gap_condition holds.
std::optional<int> minimal_kappa(const EigenPaths& paths, double c_floor, int max_kappa = 4);

struct TridiagonalReport {
  bool off_diagonals_nonzero = false;
  double min_eigen_gap = 0.0;
  RVec eigenvalues;
  /// off_diagonals_nonzero implies min_eigen_gap > 1e-12 ||A||.
  bool simple = false;
};

TridiagonalReport tridiagonal_simplicity(std::span<const double> diagonal, std::span<const double> off_diagonal);

/// Top-left m x m block of H_C(rho, w): diagonal j rho, off-diagonals w.
HermitianMatrix chirp_hamiltonian(int m, double rho, double w);

/// Top-left m x m block of H_S(w1, w2): diagonal d, link j carries w1 for odd
/// j and w2 for even j (1-based).
HermitianMatrix stirap_hamiltonian(std::span<const double> d, double w1, double w2);

enum class Axis { w1_zero, w2_zero };

std::string_view axis_name(Axis a);

struct Crossing {
  int k = 0;  // sorted positions k, k+1 (1-based) meet
  double location = 0.0;
  double slope = 0.0;
  double residual = 0.0;
  /// Bisection bracket width at termination.
  double bracket = 0.0;
  bool star = false;  // the even-m crossing of (lambda_{m-1}, lambda_m) on w1 = 0
};

struct CrossingReport {
  Axis axis = Axis::w1_zero;
  int m = 0;
  std::vector<Crossing> crossings;
  std::size_t expected = 0;
  bool counts_match = false;
  bool monotone = false;
  /// The tracked branch stays away from its neighbours between crossings.
  bool isolated = false;
  double min_isolation_gap = 0.0;
  /// Even m on w2 = 0: lambda_{m-1} and lambda_m stay apart on [0, w_max].
  std::optional<bool> top_pair_separated;
  double w_max = 0.0;
  std::vector<std::string> notes;
};

/// Default range [0, 4 (d_m - d_1)].
double default_crossing_range(std::span<const double> d);

/// Locates the crossings of the branch that starts at e_1 (w1 = 0), e_m (w2 = 0,
/// odd m) or e_{m-1} (w2 = 0, even m), and for even m on w1 = 0 also the first
/// crossing of the e_m branch. Scan plus bisection; residual <= 1e-9.
CrossingReport eigen_intersections(std::span<const double> d, Axis axis, double w_max = 0.0);

/// Ratio gap(2h)/gap(h) of the two crossing eigenvalues around a crossing,
/// worst over probe directions in the (w1, w2) plane. Near 2: conical; near
/// 4: semi-conical (quadratic along some direction).
struct ConicalProbe {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  bool conical = false;
};

ConicalProbe conical_probe(std::span<const double> d, Axis axis, const Crossing& c, double h = 1e-3);

/// Loop thresholds from the two axis reports.
StirapThresholds stirap_thresholds(const CrossingReport& w1_zero, const CrossingReport& w2_zero);

struct OscillatoryOrder {
  std::vector<double> epsilons;
  std::vector<double> sups;  // sup_tau |integral|
  /// Least-squares slope of log sup vs log eps; +infinity when a == 0.
  double slope = std::numeric_limits<double>::infinity();
};

/// sup over tau in [0,1] of |int_0^tau a(s) exp(i (beta s / eps^(alpha+1) + h(s)/eps)) ds|
/// for each eps, and the fitted decay order.
OscillatoryOrder oscillatory_order(const ScalarFn& a, const ScalarFn& h, double beta, double alpha,
                                   std::span<const double> epsilons);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace rwad
