#pragma once

// Dense complex linear algebra for small systems (n <= 16).

#include <complex>
#include <Eigen/Dense>

namespace rwad {

using Complex = std::complex<double>;

inline constexpr int kMaxDim = 16;

using CMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Largest |M_jk - conj(M_kj)| over all entries.
double hermitian_defect(const CMat& m);

/// ||U^dagger U - I||_F.
double unitarity_defect(const CMat& u);

/// Hermitian n x n matrix, 1 <= n <= 16. Construction validates
/// M = M^dagger within `kHermitianTol` and symmetrizes the stored entries.
class HermitianMatrix {
 public:
  static constexpr double kHermitianTol = 1e-12;

  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMat& m);

  static HermitianMatrix zero(int n);
  static HermitianMatrix diagonal(const RVec& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMat& matrix() const { return m_; }
  Complex operator()(int j, int k) const { return m_(j, k); }

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator*(double s) const;

 private:
  CMat m_;
};

/// Unitary n x n matrix; construction validates U^dagger U = I within 1e-10.
class UnitaryMatrix {
 public:
  static constexpr double kUnitaryTol = 1e-10;

  UnitaryMatrix() = default;
  explicit UnitaryMatrix(const CMat& m);

  static UnitaryMatrix identity(int n);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMat& matrix() const { return m_; }
  Complex operator()(int j, int k) const { return m_(j, k); }
  CVec apply(const CVec& v) const { return m_ * v; }
  UnitaryMatrix operator*(const UnitaryMatrix& o) const;
  UnitaryMatrix adjoint() const;

 private:
  CMat m_;
};

struct Eigensystem {
  RVec values;          // ascending
  UnitaryMatrix vectors;  // column j pairs with values[j]
};

/// Hermitian eigendecomposition. Each eigenvector is normalized so its
/// largest-magnitude component (first one on ties) is real and positive.
/// Degenerate eigenvalues are returned as produced by the solver.
Eigensystem eigh(const HermitianMatrix& h);

/// exp(scale * A) for skew-Hermitian A, computed through the eigensystem of
/// the Hermitian matrix iA. Throws ValidationError if A is not skew-Hermitian.
UnitaryMatrix expm_skew(const CMat& a, double scale);

/// exp(-i t H) for Hermitian H.
UnitaryMatrix expm_hermitian(const HermitianMatrix& h, double t);

}  // namespace rwad
