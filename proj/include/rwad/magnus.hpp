#pragma once

// Exponential integrators for i psi' = H(t) psi with Hermitian H(t).

#include <functional>
#include <limits>
#include <optional>
#include <string_view>

#include "rwad/kernels.hpp"
#include "rwad/linalg.hpp"

namespace rwad {

enum class Method { magnus2, magnus4, adaptive };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view s);

struct IntegratorSettings {
  Method method = Method::magnus2;
  /// Upper bound on the step; 0 selects the resolution bound 2 pi / (rho omega_max).
  double max_step = 0.0;
  /// Local error target of the adaptive method, per unit-norm state.
  double rel_tol = 1e-10;
  /// Steps per period of the fastest oscillation.
  double rho = 20.0;
};

struct IntegratorStats {
  long long steps = 0;
  long long rejected = 0;
  long long matvecs = 0;
  long long generator_evals = 0;
  double smallest_step = std::numeric_limits<double>::infinity();
  double largest_step = 0.0;
};

/// Writes H(t) into the matrix argument (already sized n x n).
using Generator = std::function<void(double, CMat&)>;

class MagnusIntegrator {
 public:
  /// `step_bound` is 2 pi / (rho omega_max) for this generator. Throws
  /// NumericRefusal when settings.max_step exceeds it.
  MagnusIntegrator(Generator h, int n, const IntegratorSettings& settings, double step_bound,
                   const kernels::KernelTable& k = kernels::active_kernels());

  /// Advances psi from t0 to t1. t1 < t0 integrates backwards.
  void advance(CVec& psi, double t0, double t1);

  double step() const { return step_; }
  const IntegratorStats& stats() const { return stats_; }

 private:
  void fixed_step(kernels::SplitVector& v, double t, double h);
  double adaptive_step(kernels::SplitVector& v, double t, double h_try, double t_end);
  void eval(double t, CMat& out);

  Generator h_;
  int n_;
  IntegratorSettings settings_;
  double step_;
  double adaptive_h_ = 0.0;
  const kernels::KernelTable& k_;
  IntegratorStats stats_;
  CMat a_, b_, eff_;
};

}  // namespace rwad
