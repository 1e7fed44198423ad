#include "rwad/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <fmt/format.h>

#include "rwad/errors.hpp"

namespace rwad {

QuantumSystem::QuantumSystem(std::vector<double> e, const CMat& h1) : coupling(h1) {
  if (static_cast<int>(e.size()) != coupling.dim())
    throw ValidationError(fmt::format("energies has {} entries but coupling is {}x{}", e.size(),
                                      coupling.dim(), coupling.dim()));
  if (e.size() < 2) throw ValidationError("a controlled system needs at least 2 levels");
  energies = RVec(static_cast<int>(e.size()));
  for (std::size_t j = 0; j < e.size(); ++j) {
    if (!std::isfinite(e[j])) throw ValidationError(fmt::format("energy E_{} is not finite", j + 1));
    energies[static_cast<int>(j)] = e[j];
  }
}

std::optional<std::size_t> SpectralGapStructure::find_gap(double sigma) const {
  for (std::size_t i = 0; i < gaps.size(); ++i)
    if (std::abs(gaps[i] - sigma) <= zero_tol) return i;
  return std::nullopt;
}

std::optional<std::size_t> SpectralGapStructure::gap_of_link(int j, int k) const {
  if (j < 0 || k < 0 || j >= dim() || k >= dim()) return std::nullopt;
  if (coupling(j, k) == Complex(0.0)) return std::nullopt;
  return find_gap(std::abs(energies[j] - energies[k]));
}

SpectralGapStructure spectral_gaps(const QuantumSystem& sys, double zero_tol) {
  if (!(zero_tol >= 0.0)) throw ValidationError("zero_tol must be nonnegative");
  SpectralGapStructure s;
  const int n = sys.dim();
  s.energies = sys.energies;
  s.zero_tol = zero_tol;
  s.coupling = sys.coupling.matrix();

  std::vector<double> raw;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      if (std::abs(s.coupling(j, k)) <= zero_tol) {
        s.coupling(j, k) = 0.0;
        continue;
      }
      raw.push_back(std::abs(sys.energies[j] - sys.energies[k]));
    }
  std::sort(raw.begin(), raw.end());
  for (double g : raw) {
    if (s.gaps.empty() || g - s.gaps.back() > zero_tol) s.gaps.push_back(g);
  }
  // A cluster that starts within tolerance of zero is the zero gap.
  if (!s.gaps.empty() && s.gaps.front() <= zero_tol) s.gaps.front() = 0.0;

  s.resonance_sets.resize(s.gaps.size());
  s.split_couplings.assign(s.gaps.size(), CMat::Zero(n, n));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      if (s.coupling(j, k) == Complex(0.0)) continue;
      const double diff = sys.energies[j] - sys.energies[k];
      const auto idx = s.find_gap(std::abs(diff));
      if (!idx) throw NumericRefusal("gap clustering is inconsistent; reduce zero_tol");
      s.split_couplings[*idx](j, k) = s.coupling(j, k);
      const bool zero_gap = s.gaps[*idx] == 0.0;
      if (zero_gap || diff > 0.0) s.resonance_sets[*idx].push_back({j, k});
    }
  return s;
}

PhaseVector::PhaseVector(std::vector<ScalarFn> phases) : phases_(std::move(phases)) {
  for (std::size_t j = 0; j < phases_.size(); ++j) {
    const double at0 = phases_[j](0.0);
    if (std::abs(at0) > 1e-14)
      throw ValidationError(fmt::format("phase phi_{} must vanish at 0, got {:.3e}", j + 1, at0));
  }
}

RVec PhaseVector::values(double tau) const {
  RVec r(dim());
  for (int j = 0; j < dim(); ++j) r[j] = phases_[j](tau);
  return r;
}

RVec PhaseVector::derivatives(double tau) const {
  RVec r(dim());
  for (int j = 0; j < dim(); ++j) r[j] = phases_[j].derivative(tau);
  return r;
}

GapVec EnvelopeSchedule::values(double tau) const {
  GapVec r(static_cast<int>(envelopes.size()));
  for (std::size_t i = 0; i < envelopes.size(); ++i) r[static_cast<int>(i)] = envelopes[i](tau);
  return r;
}

namespace {

void require_envelopes(const EnvelopeSchedule& v, const SpectralGapStructure& s) {
  if (v.size() != s.size())
    throw ConfigError(fmt::format("envelope schedule has {} entries but the system has {} gaps", v.size(),
                                  s.size()));
}

bool active_on_grid(const ScalarFn& f, std::span<const double> grid) {
  if (f.is_structurally_zero()) return false;
  return std::any_of(grid.begin(), grid.end(), [&](double t) { return std::abs(f(t)) > kEnvelopeActiveTol; });
}

}  // namespace

PhaseConstraintReport check_phase_constraint(const PhaseVector& phi, const EnvelopeSchedule& v,
                                             const SpectralGapStructure& s, std::span<const double> grid) {
  require_envelopes(v, s);
  if (phi.dim() != s.dim())
    throw ValidationError(fmt::format("phase vector has {} entries, system has {} levels", phi.dim(), s.dim()));
  PhaseConstraintReport report;
  for (std::size_t g = 0; g < s.size(); ++g) {
    const auto& pairs = s.resonance_sets[g];
    if (pairs.size() < 2 || !active_on_grid(v.envelopes[g], grid)) continue;
    for (std::size_t a = 0; a < pairs.size(); ++a)
      for (std::size_t b = a + 1; b < pairs.size(); ++b) {
        double worst = 0.0;
        for (double t : grid) {
          const double da = phi[pairs[a].row](t) - phi[pairs[a].col](t);
          const double db = phi[pairs[b].row](t) - phi[pairs[b].col](t);
          worst = std::max(worst, std::abs(da - db));
        }
        if (worst > kPhaseConstraintTol) report.violations.push_back({g, pairs[a], pairs[b], worst});
      }
  }
  return report;
}

HermitianMatrix decoupled_hamiltonian(const SpectralGapStructure& s, const RVec& delta, const GapVec& w) {
  if (delta.size() != s.dim())
    throw ValidationError(fmt::format("delta has length {}, expected {}", delta.size(), s.dim()));
  if (w.size() != static_cast<int>(s.size()))
    throw ValidationError(fmt::format("w has length {}, expected one entry per gap ({})", w.size(), s.size()));
  CMat h = CMat::Zero(s.dim(), s.dim());
  for (int j = 0; j < s.dim(); ++j) h(j, j) = delta[j];
  for (std::size_t g = 0; g < s.size(); ++g) h += w[static_cast<int>(g)] * s.split_couplings[g];
  return HermitianMatrix(h);
}

HermitianMatrix hd_at(const PhaseVector& phi, const EnvelopeSchedule& v, const SpectralGapStructure& s,
                      double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError(fmt::format("tau = {} outside [0,1]", tau));
  require_envelopes(v, s);
  return decoupled_hamiltonian(s, -phi.derivatives(tau), v.values(tau));
}

bool is_nonresonant_link(const SpectralGapStructure& s, int j, int k) {
  if (j == k) return false;
  const auto g = s.gap_of_link(j, k);
  if (!g) return false;
  const auto& pairs = s.resonance_sets[*g];
  if (pairs.size() != 1) return false;
  const LevelPair p = pairs.front();
  return (p.row == j && p.col == k) || (p.row == k && p.col == j);
}

std::optional<std::vector<int>> nonresonant_chain(const SpectralGapStructure& s, int j, int l) {
  const int n = s.dim();
  if (j < 0 || l < 0 || j >= n || l >= n)
    throw ValidationError(fmt::format("level indices ({}, {}) out of range for n = {}", j + 1, l + 1, n));
  std::vector<int> parent(n, -1);
  std::vector<bool> seen(n, false);
  std::deque<int> queue{j};
  seen[j] = true;
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    if (cur == l) break;
    for (int next = 0; next < n; ++next) {
      if (seen[next] || !is_nonresonant_link(s, cur, next)) continue;
      seen[next] = true;
      parent[next] = cur;
      queue.push_back(next);
    }
  }
  if (!seen[l]) return std::nullopt;
  std::vector<int> chain;
  for (int cur = l; cur != -1; cur = parent[cur]) chain.push_back(cur);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

}  // namespace rwad
