#include <algorithm>
#include <cmath>

#include "rwad/kernels.hpp"

namespace rwad::kernels {
namespace scalar_impl {

void matvec(const SplitMatrix& m, const SplitVector& x, SplitVector& y) {
  y.n = m.n;
  for (int j = 0; j < m.n; ++j) {
    y.re[j] = 0.0;
    y.im[j] = 0.0;
  }
  for (int k = 0; k < m.n; ++k) {
    const double xr = x.re[k];
    const double xi = x.im[k];
    const double* cr = &m.re[k * m.ld];
    const double* ci = &m.im[k * m.ld];
    for (int j = 0; j < m.n; ++j) {
      y.re[j] += cr[j] * xr - ci[j] * xi;
      y.im[j] += cr[j] * xi + ci[j] * xr;
    }
  }
}

#include "expv_impl.hpp"

double norm(const SplitVector& v) {
  double s = 0.0;
  for (int j = 0; j < v.n; ++j) s += v.re[j] * v.re[j] + v.im[j] * v.im[j];
  return std::sqrt(s);
}

}  // namespace scalar_impl

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &scalar_impl::matvec, &scalar_impl::expv_taylor, &scalar_impl::norm};
  return table;
}

}  // namespace rwad::kernels
