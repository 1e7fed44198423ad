// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "rwad/kernels.hpp"

namespace rwad::kernels {
namespace avx2_impl {

// Column-oriented product: for every column k, y += M[:,k] * x_k with x_k
// broadcast. Rows are processed four at a time; the padded stride makes the
// final partial block safe to load (padding entries are zero).
void matvec(const SplitMatrix& m, const SplitVector& x, SplitVector& y) {
  y.n = m.n;
  alignas(32) double yr[kMaxDim];
  alignas(32) double yi[kMaxDim];
  for (int r = 0; r < m.ld; r += 4) {
    __m256d acc_r = _mm256_setzero_pd();
    __m256d acc_i = _mm256_setzero_pd();
    for (int k = 0; k < m.n; ++k) {
      const __m256d xr = _mm256_set1_pd(x.re[k]);
      const __m256d xi = _mm256_set1_pd(x.im[k]);
      const __m256d cr = _mm256_load_pd(&m.re[k * m.ld + r]);
      const __m256d ci = _mm256_load_pd(&m.im[k * m.ld + r]);
      acc_r = _mm256_fmadd_pd(cr, xr, acc_r);
      acc_r = _mm256_fnmadd_pd(ci, xi, acc_r);
      acc_i = _mm256_fmadd_pd(cr, xi, acc_i);
      acc_i = _mm256_fmadd_pd(ci, xr, acc_i);
    }
    _mm256_store_pd(&yr[r], acc_r);
    _mm256_store_pd(&yi[r], acc_i);
  }
  for (int j = 0; j < m.n; ++j) {
    y.re[j] = yr[j];
    y.im[j] = yi[j];
  }
}

#include "expv_impl.hpp"

double norm(const SplitVector& v) {
  __m256d acc = _mm256_setzero_pd();
  int j = 0;
  for (; j + 4 <= v.n; j += 4) {
    const __m256d r = _mm256_loadu_pd(&v.re[j]);
    const __m256d i = _mm256_loadu_pd(&v.im[j]);
    acc = _mm256_fmadd_pd(r, r, acc);
    acc = _mm256_fmadd_pd(i, i, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; j < v.n; ++j) s += v.re[j] * v.re[j] + v.im[j] * v.im[j];
  return std::sqrt(s);
}

}  // namespace avx2_impl

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", &avx2_impl::matvec, &avx2_impl::expv_taylor, &avx2_impl::norm};
  return table;
}

}  // namespace rwad::kernels
