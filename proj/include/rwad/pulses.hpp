#pragma once

// Oscillating controls built from a decoupled schedule, and the chirp and
// STIRAP schedules for a non-resonantly coupled chain of levels.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rwad/model.hpp"
#include "rwad/scalar_fn.hpp"

namespace rwad {

/// x mod 2 pi in [-pi, pi]. 2 pi is split into two doubles, so large x keep
/// their low-order bits.
double reduce_two_pi(double x);

/// Small parameter epsilon and exponent alpha. The control lives on
/// [0, T] with T = epsilon^-(alpha+1); slow time is tau = epsilon^(alpha+1) t.
class PulseParams {
 public:
  PulseParams(double epsilon, double alpha, bool allow_subcritical = false);

  double epsilon() const { return epsilon_; }
  double alpha() const { return alpha_; }
  bool subcritical() const { return alpha_ <= 1.0; }
  double horizon() const { return 1.0 / time_scale_; }
  /// epsilon^(alpha+1)
  double time_scale() const { return time_scale_; }
  /// epsilon^alpha, the size of the physical control
  double amplitude_scale() const { return amplitude_scale_; }

 private:
  double epsilon_;
  double alpha_;
  double time_scale_;
  double amplitude_scale_;
};

struct ControlSchedule {
  EnvelopeSchedule envelopes;
  PhaseVector phases;
};

/// One carrier of the synthesized control: frequency sigma with the phase
/// difference phi_row - phi_col of a representative resonant pair.
struct Carrier {
  std::size_t gap_index;
  double sigma;
  LevelPair representative;
};

/// u_eps(t) = eps^alpha v_0(tau) + 2 eps^alpha sum_{sigma != 0} v_sigma(tau) cos(sigma t + phihat_sigma(tau)/eps)
/// with tau = eps^(alpha+1) t.
class SynthesizedPulse {
 public:
  double operator()(double t) const { return at_tau(t * params().time_scale(), t); }
  /// u_eps evaluated at slow time tau (t = tau / eps^(alpha+1)).
  double at_tau(double tau) const { return at_tau(tau, tau / params().time_scale()); }
  /// u_eps(t) / eps^alpha at slow time tau: v_0 + 2 sum v_sigma cos(chi_sigma).
  double normalized_at_tau(double tau) const;

  /// eps^alpha (|v_0|_inf + 2 sum |v_sigma|_inf), sup norms sampled on [0,1].
  double amplitude_bound() const;

  const PulseParams& params() const { return data_->params; }
  const SpectralGapStructure& structure() const { return data_->structure; }
  const EnvelopeSchedule& envelopes() const { return data_->envelopes; }
  const PhaseVector& phases() const { return data_->phases; }
  const std::vector<Carrier>& carriers() const { return data_->carriers; }
  std::optional<std::size_t> zero_gap_index() const { return data_->zero_gap; }

 private:
  struct Data {
    SpectralGapStructure structure;
    EnvelopeSchedule envelopes;
    PhaseVector phases;
    PulseParams params;
    std::vector<Carrier> carriers;
    std::optional<std::size_t> zero_gap;
  };
  explicit SynthesizedPulse(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
  double at_tau(double tau, double t) const;

  std::shared_ptr<const Data> data_;

  friend SynthesizedPulse synthesize(const SpectralGapStructure&, const EnvelopeSchedule&, const PhaseVector&,
                                     const PulseParams&, std::span<const std::size_t>);
};

/// Builds u_eps. `representatives[g]` selects which pair of R_sigma supplies
/// phihat for gap g (default: the first). Throws NumericRefusal carrying the
/// violation list when the phase constraint fails on a 257-point grid.
SynthesizedPulse synthesize(const SpectralGapStructure& s, const EnvelopeSchedule& v, const PhaseVector& phi,
                            const PulseParams& p, std::span<const std::size_t> representatives = {});

/// Chirp: every link of the chain 1..m carries u / (H1)_{j,j+1}, phi_j = j phi.
ControlSchedule chirp_schedule(int m, const SpectralGapStructure& s, const ScalarFn& u, const ScalarFn& phi);

/// STIRAP: link j carries u1 (j odd) or u2 (j even), normalized by
/// (H1)_{j,j+1}; phi_j(tau) = -d_j tau.
ControlSchedule stirap_schedule(int m, const SpectralGapStructure& s, std::span<const double> d,
                                const ScalarFn& u1, const ScalarFn& u2);

/// Crossing locations the STIRAP loops must clear.
struct StirapThresholds {
  double w2_entry = 0.0;          // largest crossing of the e_1 branch along w1 = 0
  double w1_exit = 0.0;           // largest crossing of the tracked branch along w2 = 0
  std::optional<double> w2_star;  // even m: crossing of (lambda_{m-1}, lambda_m) along w1 = 0
};

struct StirapPath {
  ScalarFn u1;
  ScalarFn u2;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double peak_u1 = 0.0;
  double peak_u2 = 0.0;
};

inline constexpr double kStirapMargin = 1.1;

/// Counter-intuitive loop for odd m: u2 rises on [0,tau1] to margin*w2_entry,
/// u1 rises on [tau1,mid], u2 falls on [mid,tau2], u1 falls on [tau2,1] from
/// margin*w1_exit. All joins are C-infinity.
StirapPath stirap_path_odd(int m, const StirapThresholds& t, double tau1, double tau2,
                           double margin = kStirapMargin);

/// Even m: the odd-m loop compressed into [0,1/2] (first quadrant, e_1 to
/// e_{m-1}), followed by a third-quadrant loop on [1/2,1] whose u2 clears
/// margin*w2_star (e_{m-1} to e_m).
StirapPath stirap_path_even(int m, const StirapThresholds& t, double tau1, double tau2,
                            double margin = kStirapMargin);

}  // namespace rwad
