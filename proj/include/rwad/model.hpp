#pragma once

// Controlled system i psi' = (H0 + u H1) psi with H0 = diag(E), its spectral
// gap structure, and the decoupled Hamiltonian obtained by giving every gap
// its own control channel.

#include <optional>
#include <span>
#include <vector>

#include "rwad/linalg.hpp"
#include "rwad/scalar_fn.hpp"

namespace rwad {

inline constexpr double kDefaultZeroTol = 1e-12;

/// One entry per spectral gap; up to n(n+1)/2 entries, so not bounded by kMaxDim.
using GapVec = Eigen::VectorXd;

struct QuantumSystem {
  RVec energies;              // E_1..E_n, angular frequency units
  HermitianMatrix coupling;   // H1

  QuantumSystem() = default;
  QuantumSystem(std::vector<double> energies, const CMat& coupling);

  int dim() const { return static_cast<int>(energies.size()); }
  HermitianMatrix drift() const { return HermitianMatrix::diagonal(energies); }
};

/// Ordered pair (row, col), 0-based, with E_row - E_col = sigma >= 0 and a
/// nonzero coupling entry.
struct LevelPair {
  int row = 0;
  int col = 0;
  friend bool operator==(const LevelPair&, const LevelPair&) = default;
};

struct SpectralGapStructure {
  RVec energies;
  CMat coupling;                               // H1 with entries <= zero_tol cleared
  double zero_tol = kDefaultZeroTol;
  std::vector<double> gaps;                    // ascending
  std::vector<std::vector<LevelPair>> resonance_sets;  // aligned with gaps
  std::vector<CMat> split_couplings;           // aligned with gaps

  int dim() const { return static_cast<int>(energies.size()); }
  std::size_t size() const { return gaps.size(); }
  /// Index of the gap equal to `sigma` within zero_tol.
  std::optional<std::size_t> find_gap(double sigma) const;
  bool has_zero_gap() const { return !gaps.empty() && gaps.front() <= zero_tol; }
  /// Index of the gap |E_j - E_k| if (j,k) is coupled.
  std::optional<std::size_t> gap_of_link(int j, int k) const;
};

SpectralGapStructure spectral_gaps(const QuantumSystem& sys, double zero_tol = kDefaultZeroTol);

/// Per-level phases phi_j with phi_j(0) = 0.
class PhaseVector {
 public:
  PhaseVector() = default;
  explicit PhaseVector(std::vector<ScalarFn> phases);
  static PhaseVector zero(int n) { return PhaseVector(std::vector<ScalarFn>(n)); }

  int dim() const { return static_cast<int>(phases_.size()); }
  const ScalarFn& operator[](int j) const { return phases_[j]; }
  RVec values(double tau) const;
  RVec derivatives(double tau) const;

 private:
  std::vector<ScalarFn> phases_;
};

/// Envelopes v_sigma aligned with SpectralGapStructure::gaps. When 0 is not a
/// gap there is no v_0 slot and v_0 is identically zero.
struct EnvelopeSchedule {
  std::vector<ScalarFn> envelopes;

  std::size_t size() const { return envelopes.size(); }
  GapVec values(double tau) const;
};

struct PhaseViolation {
  std::size_t gap_index;
  LevelPair first;
  LevelPair second;
  double max_mismatch;
};

struct PhaseConstraintReport {
  std::vector<PhaseViolation> violations;
  bool ok() const { return violations.empty(); }
};

inline constexpr double kPhaseConstraintTol = 1e-12;
inline constexpr double kEnvelopeActiveTol = 1e-14;

/// Checks that phi_j - phi_k is the same for all pairs in R_sigma whenever
/// v_sigma is not identically zero on `grid`.
PhaseConstraintReport check_phase_constraint(const PhaseVector& phi, const EnvelopeSchedule& v,
                                             const SpectralGapStructure& s, std::span<const double> grid);

/// sum_j delta_j e_jj + sum_sigma w_sigma H1^sigma
HermitianMatrix decoupled_hamiltonian(const SpectralGapStructure& s, const RVec& delta, const GapVec& w);

/// h_d(tau) = H_d(-phi'(tau), v(tau))
HermitianMatrix hd_at(const PhaseVector& phi, const EnvelopeSchedule& v, const SpectralGapStructure& s,
                      double tau);

/// Shortest chain j = j_1, ..., j_k = l of non-resonant links (each link's gap
/// has a single resonant pair). Breadth-first, lowest index first.
std::optional<std::vector<int>> nonresonant_chain(const SpectralGapStructure& s, int j, int l);

/// True when (j,k) is coupled and its gap is realized by that pair alone.
bool is_nonresonant_link(const SpectralGapStructure& s, int j, int k);

}  // namespace rwad
