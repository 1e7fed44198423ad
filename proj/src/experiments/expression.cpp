#include "rwad/experiments/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rwad/errors.hpp"

namespace rwad::experiments {
namespace {

// A parsed value keeps its constant when it is one, so that division and
// powers can be restricted to constant operands.
struct Value {
  ScalarFn fn;
  std::optional<double> constant;
};

Value constant(double c) { return {ScalarFn::constant(c), c}; }

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  ScalarFn parse() {
    Value v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return v.fn;
  }

 private:
  [[noreturn]] void fail(std::string_view what) const {
    throw ConfigError(fmt::format("function '{}': {} at position {}", s_, what, pos_ + 1));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(fmt::format("expected '{}'", c));
  }

  Value expr() {
    Value v = term();
    for (;;) {
      if (accept('+')) v = add(v, term(), 1.0);
      else if (accept('-')) v = add(v, term(), -1.0);
      else return v;
    }
  }

  static Value add(const Value& a, const Value& b, double sign) {
    if (a.constant && b.constant) return constant(*a.constant + sign * *b.constant);
    return {sign > 0 ? a.fn + b.fn : a.fn - b.fn, std::nullopt};
  }

  Value term() {
    Value v = unary();
    for (;;) {
      if (accept('*')) {
        Value r = unary();
        if (v.constant && r.constant) v = constant(*v.constant * *r.constant);
        else if (v.constant) v = {*v.constant * r.fn, std::nullopt};
        else if (r.constant) v = {*r.constant * v.fn, std::nullopt};
        else v = {v.fn * r.fn, std::nullopt};
      } else if (accept('/')) {
        Value r = unary();
        if (!r.constant) fail("division by a non-constant");
        if (*r.constant == 0.0) fail("division by zero");
        v = v.constant ? constant(*v.constant / *r.constant) : Value{(1.0 / *r.constant) * v.fn, std::nullopt};
      } else {
        return v;
      }
    }
  }

  Value unary() {
    if (accept('-')) {
      Value v = unary();
      return v.constant ? constant(-*v.constant) : Value{-v.fn, std::nullopt};
    }
    if (accept('+')) return unary();
    return power();
  }

  Value power() {
    Value base = primary();
    if (!accept('^')) return base;
    skip();
    const std::size_t at = pos_;
    const double e = number();
    if (e < 0 || e != std::floor(e) || e > 32) {
      pos_ = at;
      fail("exponent must be an integer in [0, 32]");
    }
    const int k = static_cast<int>(e);
    if (base.constant) return constant(std::pow(*base.constant, k));
    ScalarFn r = ScalarFn::constant(1.0);
    for (int i = 0; i < k; ++i) r = i == 0 ? base.fn : r * base.fn;
    return {r, std::nullopt};
  }

  double number() {
    skip();
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  std::string identifier() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<Value> arguments() {
    expect('(');
    std::vector<Value> args{expr()};
    while (accept(',')) args.push_back(expr());
    expect(')');
    return args;
  }

  // Affine coefficients (a, b) of f(tau) = a tau + b, verified at several points.
  std::pair<double, double> affine(const Value& v) {
    if (v.constant) return {0.0, *v.constant};
    const double b = v.fn(0.0);
    const double a = v.fn.derivative(0.0);
    for (double tau : {0.25, 0.5, 0.75, 1.0}) {
      const double expect_v = a * tau + b;
      if (std::abs(v.fn(tau) - expect_v) > 1e-12 * std::max(1.0, std::abs(expect_v)) ||
          std::abs(v.fn.derivative(tau) - a) > 1e-12 * std::max(1.0, std::abs(a)))
        fail("sin and cos need an argument affine in tau");
    }
    return {a, b};
  }

  Value primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Value v = expr();
      expect(')');
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(number());
    const std::size_t at = pos_;
    const std::string id = identifier();
    if (id.empty()) fail("unexpected character");
    if (id == "tau") return {ScalarFn::identity(), std::nullopt};
    if (id == "pi") return constant(std::numbers::pi);
    if (id == "sin" || id == "cos") {
      auto args = arguments();
      if (args.size() != 1) fail(fmt::format("{} takes one argument", id));
      const auto [a, b] = affine(args[0]);
      if (args[0].constant) return constant(id == "sin" ? std::sin(b) : std::cos(b));
      return {id == "sin" ? ScalarFn::sin_affine(a, b) : ScalarFn::cos_affine(a, b), std::nullopt};
    }
    if (id == "step") {
      auto args = arguments();
      if (args.size() != 2 || !args[0].constant || !args[1].constant) fail("step takes two constant arguments");
      if (!(*args[0].constant < *args[1].constant)) fail("step needs t0 < t1");
      return {ScalarFn::smooth_step(*args[0].constant, *args[1].constant), std::nullopt};
    }
    pos_ = at;
    fail(fmt::format("unknown name '{}'", id));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarFn parse_function(std::string_view text) { return Parser(text).parse(); }

}  // namespace rwad::experiments
