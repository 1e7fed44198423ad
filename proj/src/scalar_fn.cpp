#include "rwad/scalar_fn.hpp"

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "rwad/errors.hpp"

namespace rwad {
namespace {

class ConstantNode final : public ScalarFn::Node {
 public:
  explicit ConstantNode(double c) : c_(c) {}
  Dual eval(double) const override { return {c_, 0.0}; }
  std::string describe() const override { return fmt::format("{}", c_); }
  double value() const { return c_; }

 private:
  double c_;
};

class PolynomialNode final : public ScalarFn::Node {
 public:
  explicit PolynomialNode(std::vector<double> c) : c_(std::move(c)) {}
  Dual eval(double tau) const override {
    // Horner for value and derivative together.
    Dual r{0.0, 0.0};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      r.derivative = r.derivative * tau + r.value;
      r.value = r.value * tau + *it;
    }
    return r;
  }
  std::string describe() const override { return fmt::format("poly[{}]", fmt::join(c_, ",")); }

 private:
  std::vector<double> c_;
};

class TrigNode final : public ScalarFn::Node {
 public:
  TrigNode(bool is_sin, double a, double b) : is_sin_(is_sin), a_(a), b_(b) {}
  Dual eval(double tau) const override {
    const double x = a_ * tau + b_;
    const double s = std::sin(x);
    const double c = std::cos(x);
    return is_sin_ ? Dual{s, a_ * c} : Dual{c, -a_ * s};
  }
  std::string describe() const override {
    return fmt::format("{}({}*tau+{})", is_sin_ ? "sin" : "cos", a_, b_);
  }

 private:
  bool is_sin_;
  double a_;
  double b_;
};

class SmoothStepNode final : public ScalarFn::Node {
 public:
  SmoothStepNode(double t0, double t1) : t0_(t0), t1_(t1) {}
  Dual eval(double tau) const override {
    const double width = t1_ - t0_;
    const double x = (tau - t0_) / width;
    if (x <= 0.0) return {0.0, 0.0};
    if (x >= 1.0) return {1.0, 0.0};
    // f(x) = exp(-1/x), f'(x) = f(x)/x^2
    const double f = std::exp(-1.0 / x);
    const double g = std::exp(-1.0 / (1.0 - x));
    const double df = f / (x * x);
    const double dg = -g / ((1.0 - x) * (1.0 - x));
    const double den = f + g;
    const double value = f / den;
    const double dvalue = (df * den - f * (df + dg)) / (den * den);
    return {value, dvalue / width};
  }
  std::string describe() const override { return fmt::format("step({},{})", t0_, t1_); }

 private:
  double t0_;
  double t1_;
};

class SumNode final : public ScalarFn::Node {
 public:
  SumNode(ScalarFn a, ScalarFn b, double sign) : a_(std::move(a)), b_(std::move(b)), sign_(sign) {}
  Dual eval(double tau) const override {
    const Dual x = a_.eval(tau);
    const Dual y = b_.eval(tau);
    return {x.value + sign_ * y.value, x.derivative + sign_ * y.derivative};
  }
  std::string describe() const override {
    return fmt::format("({} {} {})", a_.describe(), sign_ > 0 ? "+" : "-", b_.describe());
  }

 private:
  ScalarFn a_;
  ScalarFn b_;
  double sign_;
};

class ProductNode final : public ScalarFn::Node {
 public:
  ProductNode(ScalarFn a, ScalarFn b) : a_(std::move(a)), b_(std::move(b)) {}
  Dual eval(double tau) const override {
    const Dual x = a_.eval(tau);
    const Dual y = b_.eval(tau);
    return {x.value * y.value, x.derivative * y.value + x.value * y.derivative};
  }
  std::string describe() const override { return fmt::format("{}*{}", a_.describe(), b_.describe()); }

 private:
  ScalarFn a_;
  ScalarFn b_;
};

class ScaleNode final : public ScalarFn::Node {
 public:
  ScaleNode(double s, ScalarFn a) : s_(s), a_(std::move(a)) {}
  Dual eval(double tau) const override {
    const Dual x = a_.eval(tau);
    return {s_ * x.value, s_ * x.derivative};
  }
  std::string describe() const override { return fmt::format("{}*{}", s_, a_.describe()); }

 private:
  double s_;
  ScalarFn a_;
};

}  // namespace

ScalarFn::ScalarFn() : node_(std::make_shared<ConstantNode>(0.0)) {}

ScalarFn ScalarFn::constant(double c) { return ScalarFn(std::make_shared<ConstantNode>(c)); }

ScalarFn ScalarFn::identity() { return polynomial({0.0, 1.0}); }

ScalarFn ScalarFn::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  return ScalarFn(std::make_shared<PolynomialNode>(std::move(coeffs)));
}

ScalarFn ScalarFn::sin_affine(double a, double b) { return ScalarFn(std::make_shared<TrigNode>(true, a, b)); }

ScalarFn ScalarFn::cos_affine(double a, double b) { return ScalarFn(std::make_shared<TrigNode>(false, a, b)); }

ScalarFn ScalarFn::smooth_step(double t0, double t1) {
  if (!(t1 > t0)) throw ValidationError(fmt::format("smooth_step needs t0 < t1, got [{}, {}]", t0, t1));
  return ScalarFn(std::make_shared<SmoothStepNode>(t0, t1));
}

bool ScalarFn::is_structurally_zero() const {
  const auto* c = dynamic_cast<const ConstantNode*>(node_.get());
  return c != nullptr && c->value() == 0.0;
}

ScalarFn operator+(const ScalarFn& a, const ScalarFn& b) {
  if (a.is_structurally_zero()) return b;
  if (b.is_structurally_zero()) return a;
  return ScalarFn(std::make_shared<SumNode>(a, b, 1.0));
}

ScalarFn operator-(const ScalarFn& a, const ScalarFn& b) {
  if (b.is_structurally_zero()) return a;
  return ScalarFn(std::make_shared<SumNode>(a, b, -1.0));
}

ScalarFn operator*(const ScalarFn& a, const ScalarFn& b) {
  if (a.is_structurally_zero() || b.is_structurally_zero()) return ScalarFn();
  return ScalarFn(std::make_shared<ProductNode>(a, b));
}

ScalarFn operator*(double s, const ScalarFn& a) {
  if (s == 0.0 || a.is_structurally_zero()) return ScalarFn();
  if (s == 1.0) return a;
  return ScalarFn(std::make_shared<ScaleNode>(s, a));
}

ScalarFn operator-(const ScalarFn& a) { return -1.0 * a; }

double sup_norm(const ScalarFn& f, int samples) {
  double best = 0.0;
  for (int i = 0; i < samples; ++i) best = std::max(best, std::abs(f(static_cast<double>(i) / (samples - 1))));
  return best;
}

}  // namespace rwad
