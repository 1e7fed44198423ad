#include "rwad/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "rwad/errors.hpp"

namespace rwad {

double hermitian_defect(const CMat& m) {
  double worst = 0.0;
  for (int j = 0; j < m.rows(); ++j)
    for (int k = j; k < m.cols(); ++k)
      worst = std::max(worst, std::abs(m(j, k) - std::conj(m(k, j))));
  return worst;
}

double unitarity_defect(const CMat& u) {
  const CMat eye = CMat::Identity(u.rows(), u.cols());
  return (u.adjoint() * u - eye).norm();
}

HermitianMatrix::HermitianMatrix(const CMat& m) {
  if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxDim)
    throw ValidationError(fmt::format("Hermitian matrix must be square with 1 <= n <= {}, got {}x{}",
                                      kMaxDim, m.rows(), m.cols()));
  const double defect = hermitian_defect(m);
  if (!(defect <= kHermitianTol))
    throw ValidationError(fmt::format("matrix is not Hermitian: max |M_jk - conj(M_kj)| = {:.3e}", defect));
  m_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::zero(int n) {
  return HermitianMatrix(CMat::Zero(n, n));
}

HermitianMatrix HermitianMatrix::diagonal(const RVec& d) {
  CMat m = CMat::Zero(d.size(), d.size());
  for (int j = 0; j < d.size(); ++j) m(j, j) = d[j];
  return HermitianMatrix(m);
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  if (o.dim() != dim()) throw ValidationError("dimension mismatch in Hermitian sum");
  HermitianMatrix r;
  r.m_ = m_ + o.m_;
  return r;
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  HermitianMatrix r;
  r.m_ = m_ * s;
  return r;
}

UnitaryMatrix::UnitaryMatrix(const CMat& m) : m_(m) {
  if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxDim)
    throw ValidationError("unitary matrix must be square with 1 <= n <= 16");
  const double defect = unitarity_defect(m);
  if (!(defect <= kUnitaryTol))
    throw ValidationError(fmt::format("matrix is not unitary: ||U*U - I||_F = {:.3e}", defect));
}

UnitaryMatrix UnitaryMatrix::identity(int n) { return UnitaryMatrix(CMat::Identity(n, n)); }

UnitaryMatrix UnitaryMatrix::operator*(const UnitaryMatrix& o) const {
  UnitaryMatrix r;
  r.m_ = m_ * o.m_;
  return r;
}

UnitaryMatrix UnitaryMatrix::adjoint() const {
  UnitaryMatrix r;
  r.m_ = m_.adjoint();
  return r;
}

Eigensystem eigh(const HermitianMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMat> solver(h.matrix());
  if (solver.info() != Eigen::Success) throw NumericRefusal("Hermitian eigensolver did not converge");
  CMat vecs = solver.eigenvectors();
  for (int j = 0; j < vecs.cols(); ++j) {
    int arg = 0;
    double best = -1.0;
    for (int k = 0; k < vecs.rows(); ++k) {
      const double a = std::abs(vecs(k, j));
      if (a > best * (1.0 + 1e-12) + 1e-300) {
        best = a;
        arg = k;
      }
    }
    const Complex pivot = vecs(arg, j);
    vecs.col(j) *= std::conj(pivot) / std::abs(pivot);
    vecs(arg, j) = std::abs(vecs(arg, j));
  }
  return Eigensystem{solver.eigenvalues(), UnitaryMatrix(vecs)};
}

UnitaryMatrix expm_hermitian(const HermitianMatrix& h, double t) {
  const Eigensystem es = eigh(h);
  const CMat& v = es.vectors.matrix();
  CVec phases(es.values.size());
  for (int j = 0; j < es.values.size(); ++j) phases[j] = std::polar(1.0, -t * es.values[j]);
  return UnitaryMatrix(v * phases.asDiagonal() * v.adjoint());
}

UnitaryMatrix expm_skew(const CMat& a, double scale) {
  if (a.rows() != a.cols()) throw ValidationError("expm_skew needs a square matrix");
  double defect = 0.0;
  for (int j = 0; j < a.rows(); ++j)
    for (int k = j; k < a.cols(); ++k) defect = std::max(defect, std::abs(a(j, k) + std::conj(a(k, j))));
  if (!(defect <= 1e-12))
    throw ValidationError(fmt::format("matrix is not skew-Hermitian: max |A_jk + conj(A_kj)| = {:.3e}", defect));
  // exp(s A) = exp(-i s H) with H = iA.
  const CMat h = Complex(0.0, 1.0) * a;
  return expm_hermitian(HermitianMatrix(0.5 * (h + h.adjoint())), scale);
}

}  // namespace rwad
