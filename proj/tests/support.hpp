#pragma once

// Seeded generators and small numeric oracles shared by the unit tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "rwad/linalg.hpp"

namespace testing {

using rwad::CMat;
using rwad::Complex;
using rwad::CVec;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

inline CMat random_matrix(std::mt19937_64& g, int n, double scale = 1.0) {
  CMat m(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) m(j, k) = Complex(uniform(g, -scale, scale), uniform(g, -scale, scale));
  return m;
}

inline CMat random_hermitian(std::mt19937_64& g, int n, double scale = 1.0) {
  const CMat a = random_matrix(g, n, scale);
  return CMat(0.5 * (a + a.adjoint()));
}

inline CMat random_skew(std::mt19937_64& g, int n, double scale = 1.0) {
  const CMat a = random_matrix(g, n, scale);
  return CMat(0.5 * (a - a.adjoint()));
}

inline CVec random_state(std::mt19937_64& g, int n) {
  CVec v(n);
  for (int j = 0; j < n; ++j) v[j] = Complex(uniform(g, -1, 1), uniform(g, -1, 1));
  return v / v.norm();
}

/// exp(A) by scaling and squaring of a 30-term Taylor series.
inline CMat taylor_expm(const CMat& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
  const CMat b = a / std::ldexp(1.0, squarings);
  CMat term = CMat::Identity(a.rows(), a.cols());
  CMat sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = (term * b / static_cast<double>(k)).eval();
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

/// Eigenvalues of the real symmetric tridiagonal matrix (diag, off) by
/// bisection on Sturm sequence counts of det(T - lambda I).
inline std::vector<double> tridiagonal_roots(const std::vector<double>& diag, const std::vector<double>& off) {
  const int n = static_cast<int>(diag.size());
  double bound = 0.0;
  for (int j = 0; j < n; ++j)
    bound = std::max(bound, std::abs(diag[j]) + (j > 0 ? std::abs(off[j - 1]) : 0.0) +
                                (j + 1 < n ? std::abs(off[j]) : 0.0));
  // Number of eigenvalues below x: sign changes of the leading principal minors.
  auto count_below = [&](double x) {
    int count = 0;
    double q = 1.0;
    for (int j = 0; j < n; ++j) {
      const double b2 = j > 0 ? off[j - 1] * off[j - 1] : 0.0;
      q = diag[j] - x - (j > 0 ? b2 / q : 0.0);
      if (q == 0.0) q = -1e-300;
      if (q < 0.0) ++count;
    }
    return count;
  };
  std::vector<double> roots(n);
  for (int k = 0; k < n; ++k) {
    double lo = -bound - 1.0, hi = bound + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, bound); ++it) {
      const double mid = 0.5 * (lo + hi);
      (count_below(mid) > k ? hi : lo) = mid;
    }
    roots[k] = 0.5 * (lo + hi);
  }
  return roots;
}

}  // namespace testing
