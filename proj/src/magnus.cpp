#include "rwad/magnus.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rwad/errors.hpp"

namespace rwad {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::magnus2: return "magnus2";
    case Method::magnus4: return "magnus4";
    case Method::adaptive: return "adaptive";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view s) {
  if (s == "magnus2") return Method::magnus2;
  if (s == "magnus4") return Method::magnus4;
  if (s == "adaptive") return Method::adaptive;
  return std::nullopt;
}

MagnusIntegrator::MagnusIntegrator(Generator h, int n, const IntegratorSettings& settings, double step_bound,
                                   const kernels::KernelTable& k)
    : h_(std::move(h)), n_(n), settings_(settings), k_(k) {
  if (!(step_bound > 0.0) || !std::isfinite(step_bound))
    throw NumericRefusal(fmt::format("invalid resolution step bound {}", step_bound));
  if (settings.max_step < 0.0) throw ValidationError("max_step must be nonnegative");
  if (settings.max_step > step_bound * (1.0 + 1e-12))
    throw NumericRefusal(fmt::format("max_step {} exceeds the resolution bound {:.6g} = 2 pi / (rho omega_max)",
                                     settings.max_step, step_bound));
  step_ = settings.max_step > 0.0 ? settings.max_step : step_bound;
  adaptive_h_ = step_;
  a_.resize(n, n);
  b_.resize(n, n);
  eff_.resize(n, n);
}

void MagnusIntegrator::eval(double t, CMat& out) {
  h_(t, out);
  ++stats_.generator_evals;
}

void MagnusIntegrator::fixed_step(kernels::SplitVector& v, double t, double h) {
  if (settings_.method == Method::magnus2) {
    eval(t + 0.5 * h, a_);
    stats_.matvecs += k_.expv(kernels::SplitMatrix::from(a_), h, v);
  } else {
    constexpr double kC = 0.28867513459481287;  // sqrt(3)/6
    constexpr double kD = 0.14433756729740643;  // sqrt(3)/12
    eval(t + (0.5 - kC) * h, a_);
    eval(t + (0.5 + kC) * h, b_);
    // h/2 (H1 + H2) - i sqrt(3)/12 h^2 [H2, H1]
    eff_.noalias() = (0.5 * h) * (a_ + b_);
    eff_.noalias() += Complex(0.0, -kD * h * h) * (b_ * a_ - a_ * b_);
    stats_.matvecs += k_.expv(kernels::SplitMatrix::from(eff_), 1.0, v);
  }
  ++stats_.steps;
  stats_.smallest_step = std::min(stats_.smallest_step, std::abs(h));
  stats_.largest_step = std::max(stats_.largest_step, std::abs(h));
}

double MagnusIntegrator::adaptive_step(kernels::SplitVector& v, double t, double h_try, double t_end) {
  const double dir = t_end >= t ? 1.0 : -1.0;
  double h = std::min(std::abs(h_try), step_);
  for (;;) {
    const double remaining = std::abs(t_end - t);
    const bool last = h >= remaining;
    if (last) h = remaining;
    const double hs = dir * h;

    kernels::SplitVector low = v;
    eval(t + 0.5 * hs, a_);
    stats_.matvecs += k_.expv(kernels::SplitMatrix::from(a_), hs, low);

    kernels::SplitVector high = v;
    const Method saved = settings_.method;
    settings_.method = Method::magnus4;
    fixed_step(high, t, hs);
    settings_.method = saved;
    --stats_.steps;

    double err = 0.0;
    for (int j = 0; j < v.n; ++j) err += std::norm(Complex(high.re[j] - low.re[j], high.im[j] - low.im[j]));
    err = std::sqrt(err);
    const double factor = err > 0.0 ? 0.9 * std::cbrt(settings_.rel_tol / err) : 2.0;
    if (err <= settings_.rel_tol || h <= 1e-14 * std::max(1.0, std::abs(t))) {
      v = high;
      ++stats_.steps;
      stats_.smallest_step = std::min(stats_.smallest_step, h);
      stats_.largest_step = std::max(stats_.largest_step, h);
      adaptive_h_ = std::min(step_, h * std::clamp(factor, 0.2, 2.0));
      // Keep the growth from the last, possibly truncated, step out of the estimate.
      if (last) adaptive_h_ = std::max(adaptive_h_, std::min(step_, std::abs(h_try)));
      return t + hs;
    }
    ++stats_.rejected;
    h *= std::clamp(factor, 0.2, 0.9);
  }
}

void MagnusIntegrator::advance(CVec& psi, double t0, double t1) {
  if (psi.size() != n_) throw ValidationError("state dimension does not match the generator");
  if (t1 == t0) return;
  kernels::SplitVector v = kernels::SplitVector::from(psi);
  if (settings_.method == Method::adaptive) {
    double t = t0;
    while (t != t1) t = adaptive_step(v, t, adaptive_h_, t1);
  } else {
    const double span = t1 - t0;
    const long long steps = std::max(1LL, static_cast<long long>(std::ceil(std::abs(span) / step_ * (1.0 - 1e-13))));
    const double h = span / static_cast<double>(steps);
    for (long long i = 0; i < steps; ++i) fixed_step(v, t0 + static_cast<double>(i) * h, h);
  }
  psi = v.to_vec();
}

}  // namespace rwad
