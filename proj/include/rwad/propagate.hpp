#pragma once

// Lab-frame and rotating-frame propagation under a synthesized pulse, the
// decoupled reference flow, the frame phase V_eps, the error between the two
// flows, and the adiabatic transporter built from eigenpaths.

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "rwad/magnus.hpp"
#include "rwad/model.hpp"
#include "rwad/pulses.hpp"
#include "rwad/spectral.hpp"

namespace rwad {

enum class Frame { lab, rotating, reference };

std::string_view frame_name(Frame f);

struct Trajectory {
  Frame frame = Frame::lab;
  std::vector<double> tau;
  std::vector<CVec> states;
  double epsilon = 0.0;
  double alpha = 0.0;
  IntegratorSettings settings;
  IntegratorStats stats;
  /// Fastest oscillation used to bound the step, in the frame's native time.
  double omega_max = 0.0;
  double step = 0.0;

  std::size_t size() const { return tau.size(); }
  RVec populations(std::size_t i) const;
  const CVec& final_state() const { return states.back(); }
  /// max | ||psi|| - 1 | over the samples.
  double max_norm_drift() const;
  /// max | sum_j p_j - 1 | over the samples.
  double max_population_defect() const;
  /// tau,re_psi_1,im_psi_1,...,p_1,...,p_n,norm
  void write_csv(std::ostream& out) const;
};

/// `points` uniform points on [0, 1], endpoints included.
std::vector<double> uniform_grid(int points);

/// max sigma + eps^alpha max |phihat_sigma'| + max |E_j|, in lab time units.
double lab_omega_max(const QuantumSystem& sys, const SynthesizedPulse& pulse);

/// psi(t) for i psi' = (H0 + u_eps(t) H1) psi, sampled at t = tau / eps^(alpha+1).
Trajectory propagate_lab(const QuantumSystem& sys, const SynthesizedPulse& pulse, const CVec& psi0,
                         const IntegratorSettings& settings, std::span<const double> grid);

/// The Hermitian generator of the rotating frame in tau time,
/// (1/eps)(h_d(tau) + K(tau)), where K collects the oscillating terms.
/// Built from the coupling of `sys`, which may differ from the pulse's
/// nominal coupling.
CMat rotating_generator(const QuantumSystem& sys, const SynthesizedPulse& pulse, double tau);

/// B_eps(tau) = -i K(tau): the rotating generator minus the decoupled part,
/// times -i eps. Skew-Hermitian.
CMat oscillating_remainder(const QuantumSystem& sys, const SynthesizedPulse& pulse, double tau);

/// Psi(tau) = V_eps(tau)^* psi(tau / eps^(alpha+1)), integrated directly.
Trajectory propagate_rotating(const QuantumSystem& sys, const SynthesizedPulse& pulse, const CVec& psi0,
                              const IntegratorSettings& settings, std::span<const double> grid);

/// i dPsi/dtau = (1/eps) h_d(tau) Psi, sampled on grid (equivalently s = tau/eps).
Trajectory adiabatic_reference(const HermitianFamily& hd, double epsilon, const CVec& psi0,
                               std::span<const double> grid, const IntegratorSettings& settings = {});

/// diag(exp(-i (E_j tau / eps^(alpha+1) + phi_j(tau) / eps)))
UnitaryMatrix frame_phase(const RVec& energies, const PhaseVector& phi, double epsilon, double alpha, double tau);

struct FlowError {
  std::vector<double> tau;
  /// || psi(tau / eps^(alpha+1)) - V_eps(tau) Psihat(tau / eps) ||
  std::vector<double> error;
  /// | < psi, V_eps Psihat > |
  std::vector<double> fidelity;
  double sup_error = 0.0;
  double min_fidelity = 1.0;
};

/// Compares a lab (or rotating) trajectory with a reference trajectory on
/// the same grid. Throws ValidationError on grid or parameter mismatch.
FlowError flow_error(const Trajectory& fast, const Trajectory& ref, const RVec& energies,
                         const PhaseVector& phi);

/// P(tau) exp(-(i/eps) int_0^tau Lambda) exp(int_0^tau D) P(0)^*, with D the
/// diagonal of (dP^*/dtau) P. Refuses when two eigenvalues meet on the grid.
UnitaryMatrix adiabatic_transporter(const EigenPaths& paths, double epsilon, double tau);

}  // namespace rwad
