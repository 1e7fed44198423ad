#pragma once

// Smooth real functions on [0,1] with exact first derivatives, built from a
// small set of closed-form pieces. Evaluation uses forward-mode dual numbers.

#include <memory>
#include <string>
#include <vector>

namespace rwad {

struct Dual {
  double value = 0.0;
  double derivative = 0.0;
};

class ScalarFn {
 public:
  class Node {
   public:
    virtual ~Node() = default;
    virtual Dual eval(double tau) const = 0;
    virtual std::string describe() const = 0;
  };

  /// The zero function.
  ScalarFn();

  static ScalarFn constant(double c);
  /// tau -> tau
  static ScalarFn identity();
  /// c[0] + c[1] tau + c[2] tau^2 + ...
  static ScalarFn polynomial(std::vector<double> coeffs);
  /// sin(a tau + b)
  static ScalarFn sin_affine(double a, double b = 0.0);
  /// cos(a tau + b)
  static ScalarFn cos_affine(double a, double b = 0.0);
  /// C-infinity step: 0 for tau <= t0, 1 for tau >= t1, built from
  /// f(x) = exp(-1/x) as f(x) / (f(x) + f(1 - x)), x = (tau - t0)/(t1 - t0).
  static ScalarFn smooth_step(double t0, double t1);

  Dual eval(double tau) const { return node_->eval(tau); }
  double operator()(double tau) const { return node_->eval(tau).value; }
  double derivative(double tau) const { return node_->eval(tau).derivative; }
  std::string describe() const { return node_->describe(); }

  /// True only for functions built as an exact zero constant.
  bool is_structurally_zero() const;

  friend ScalarFn operator+(const ScalarFn& a, const ScalarFn& b);
  friend ScalarFn operator-(const ScalarFn& a, const ScalarFn& b);
  friend ScalarFn operator*(const ScalarFn& a, const ScalarFn& b);
  friend ScalarFn operator*(double s, const ScalarFn& a);
  friend ScalarFn operator-(const ScalarFn& a);

 private:
  explicit ScalarFn(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// max |f| over `samples` uniform points of [0,1] (endpoints included).
double sup_norm(const ScalarFn& f, int samples = 4097);

}  // namespace rwad
