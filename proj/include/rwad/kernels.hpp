#pragma once

// Inner-loop kernels for state propagation. Each kernel has a portable scalar
// reference implementation and, on x86-64, an AVX2/FMA variant. The variant is
// chosen once at runtime from CPUID; RWAD_FORCE_SCALAR=1 pins the reference.

#include <array>
#include <string_view>

#include "rwad/linalg.hpp"

namespace rwad::kernels {

/// Split-complex, column-major matrix with the row stride padded to a
/// multiple of four doubles. Padding rows are zero.
struct alignas(32) SplitMatrix {
  int n = 0;
  int ld = 0;
  // Only the first n columns of stride ld are meaningful.
  std::array<double, kMaxDim * kMaxDim> re;
  std::array<double, kMaxDim * kMaxDim> im;

  static SplitMatrix from(const CMat& m);
  static int padded(int n) { return (n + 3) & ~3; }
};

struct alignas(32) SplitVector {
  int n = 0;
  std::array<double, kMaxDim> re{};
  std::array<double, kMaxDim> im{};

  static SplitVector from(const CVec& v);
  CVec to_vec() const;
};

struct KernelTable {
  std::string_view name;
  /// y = M x
  void (*cmatvec)(const SplitMatrix& m, const SplitVector& x, SplitVector& y);
  /// v <- exp(-i * scale * H) v for Hermitian H, by a Taylor series truncated
  /// below double precision, with norm-based substepping. Returns the number of
  /// matrix-vector products used.
  int (*expv)(const SplitMatrix& h, double scale, SplitVector& v);
  /// ||v||_2
  double (*norm)(const SplitVector& v);
};

const KernelTable& scalar_kernels();
/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();
/// The table selected for this process.
const KernelTable& active_kernels();

}  // namespace rwad::kernels
