#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "rwad/errors.hpp"
#include "rwad/linalg.hpp"
#include "rwad/spectral.hpp"
#include "support.hpp"

using namespace rwad;
using testing::Complex;

TEST_CASE("hermitian construction validates and symmetrizes") {
  CMat m(2, 2);
  m << 1.0, Complex(0, 1), Complex(0, -1), 2.0;
  CHECK(HermitianMatrix(m).dim() == 2);
  m(0, 1) = 3.0;
  CHECK_THROWS_AS(HermitianMatrix{m}, ValidationError);
  CMat u = CMat::Identity(2, 2);
  u(0, 0) = 2.0;
  CHECK_THROWS_AS(UnitaryMatrix{u}, ValidationError);
}

TEST_CASE("eigh of a diagonal matrix") {
  RVec d(3);
  d << 0.0, 1.0, 2.5;
  const Eigensystem es = eigh(HermitianMatrix::diagonal(d));
  CHECK((es.values - d).norm() == doctest::Approx(0.0));
  CHECK((es.vectors.matrix() - CMat::Identity(3, 3)).norm() < 1e-15);
}

TEST_CASE("eigh of sigma_x") {
  CMat x(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  const Eigensystem es = eigh(HermitianMatrix(x));
  CHECK(es.values[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(es.values[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("eigh matches characteristic polynomial roots of the 7-level STIRAP block") {
  const std::vector<double> d{1, 2, 3, 4, 5, 6, 7};
  const Eigensystem es = eigh(stirap_hamiltonian(d, 1.0, 1.0));
  const std::vector<double> roots = testing::tridiagonal_roots(d, std::vector<double>(6, 1.0));
  for (int j = 0; j < 7; ++j) CHECK(std::abs(es.values[j] - roots[j]) < 1e-9);
}

TEST_CASE("eigenvector normalization: largest component real and positive") {
  auto g = testing::rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = testing::uniform_int(g, 1, 8);
    const HermitianMatrix h(testing::random_hermitian(g, n));
    const Eigensystem es = eigh(h);
    for (int j = 0; j < n; ++j) {
      Eigen::Index at = 0;
      es.vectors.matrix().col(j).cwiseAbs().maxCoeff(&at);
      const Complex c = es.vectors.matrix()(at, j);
      CHECK(std::abs(c.imag()) < 1e-14);
      CHECK(c.real() > 0.0);
    }
  }
}

TEST_CASE("expm_skew of zero and of a diagonal") {
  CHECK((expm_skew(CMat::Zero(3, 3), 2.0).matrix() - CMat::Identity(3, 3)).norm() == 0.0);
  CMat a = CMat::Zero(3, 3);
  const double phases[3] = {0.3, -1.7, 4.0};
  for (int j = 0; j < 3; ++j) a(j, j) = Complex(0, phases[j]);
  const UnitaryMatrix u = expm_skew(a, 0.7);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(u(j, j) - std::exp(Complex(0, phases[j] * 0.7))) < 1e-15);
}

TEST_CASE("expm_skew agrees with two independent exponentials") {
  auto g = testing::rng(4);
  const CMat a = testing::random_skew(g, 4);
  const CMat ours = expm_skew(a, 0.3).matrix();
  const Eigen::MatrixXcd dense = Eigen::MatrixXcd(a * 0.3);
  const Eigen::MatrixXcd eigen_ref = dense.exp();
  CHECK((ours - CMat(eigen_ref)).norm() < 1e-11);
  CHECK((ours - testing::taylor_expm(CMat(a * 0.3))).norm() < 1e-11);
}

TEST_CASE("expm_skew refuses non-skew input") {
  CMat a = CMat::Identity(2, 2);
  CHECK_THROWS_AS(expm_skew(a, 1.0), ValidationError);
}

TEST_CASE("property: exponentials of random generators are unitary and match Taylor") {
  auto g = testing::rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = testing::uniform_int(g, 1, kMaxDim);
    const double scale = testing::uniform(g, 0.01, 5.0);
    const CMat a = testing::random_skew(g, n);
    const UnitaryMatrix u = expm_skew(a, scale);
    CHECK(unitarity_defect(u.matrix()) <= 1e-10);
    CHECK((u.matrix() - testing::taylor_expm(CMat(a * scale))).norm() < 1e-9 * std::max(1.0, scale * n));
  }
}

TEST_CASE("property: eigh residual and orthonormality") {
  auto g = testing::rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = testing::uniform_int(g, 1, kMaxDim);
    const HermitianMatrix h(testing::random_hermitian(g, n, testing::uniform(g, 0.1, 10.0)));
    const Eigensystem es = eigh(h);
    const CMat& p = es.vectors.matrix();
    const double r = (h.matrix() * p - p * es.values.cast<Complex>().asDiagonal()).norm();
    CHECK(r <= 1e-12 * std::max(1.0, h.matrix().norm()));
    CHECK(unitarity_defect(p) <= 1e-12);
    for (int j = 1; j < n; ++j) CHECK(es.values[j - 1] <= es.values[j]);
  }
}

TEST_CASE("expm_hermitian inverts under time reversal") {
  auto g = testing::rng(5);
  const HermitianMatrix h(testing::random_hermitian(g, 6));
  const UnitaryMatrix u = expm_hermitian(h, 1.3) * expm_hermitian(h, -1.3);
  CHECK((u.matrix() - CMat::Identity(6, 6)).norm() < 1e-13);
}
