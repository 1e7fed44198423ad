#include <cstdlib>
#include <cstring>

#include "rwad/kernels.hpp"

namespace rwad::kernels {

#ifdef RWAD_WITH_AVX2
const KernelTable& avx2_table();
#endif

SplitMatrix SplitMatrix::from(const CMat& m) {
  SplitMatrix s;
  s.n = static_cast<int>(m.rows());
  s.ld = padded(s.n);
  for (int k = 0; k < s.n; ++k) {
    for (int j = 0; j < s.n; ++j) {
      s.re[k * s.ld + j] = m(j, k).real();
      s.im[k * s.ld + j] = m(j, k).imag();
    }
    for (int j = s.n; j < s.ld; ++j) s.re[k * s.ld + j] = s.im[k * s.ld + j] = 0.0;
  }
  return s;
}

SplitVector SplitVector::from(const CVec& v) {
  SplitVector s;
  s.n = static_cast<int>(v.size());
  for (int j = 0; j < s.n; ++j) {
    s.re[j] = v[j].real();
    s.im[j] = v[j].imag();
  }
  return s;
}

CVec SplitVector::to_vec() const {
  CVec v(n);
  for (int j = 0; j < n; ++j) v[j] = Complex(re[j], im[j]);
  return v;
}

const KernelTable* avx2_kernels() {
#ifdef RWAD_WITH_AVX2
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* force = std::getenv("RWAD_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "0") != 0 && *force != '\0') return scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return *t;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace rwad::kernels
