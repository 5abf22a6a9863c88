#include <gtest/gtest.h>

#include "homprop/jacobi.hpp"

#include <Eigen/Eigenvalues>
#include <random>

using namespace homprop;

namespace {
CMatrix random_hermitian(Eigen::Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = {g(rng), g(rng)};
  return 0.5 * (a + a.adjoint());
}
} // namespace

TEST(Jacobi, TwoByTwoClosedForm) {
  // [[a, b e^{i phi}], [b e^{-i phi}, c]] has eigenvalues (a+c)/2 -+ sqrt(((a-c)/2)^2 + b^2)
  const double a = 1.3, c = -0.4, b = 0.7, phi = 0.9;
  CMatrix h(2, 2);
  h << a, b * std::exp(cplx(0, phi)), b * std::exp(cplx(0, -phi)), c;
  const auto d = jacobi_hermitian(h);
  const double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  EXPECT_NEAR(d.values[0], 0.5 * (a + c) - r, 1e-14);
  EXPECT_NEAR(d.values[1], 0.5 * (a + c) + r, 1e-14);
}

TEST(Jacobi, DiagonalInputUntouched) {
  CMatrix h = CMatrix::Zero(3, 3);
  h.diagonal() << 3.0, -1.0, 2.0;
  const auto d = jacobi_hermitian(h);
  EXPECT_EQ(d.sweeps, 0);
  EXPECT_EQ(d.values[0], -1.0);
  EXPECT_EQ(d.values[2], 3.0);
  EXPECT_EQ(d.vectors.col(0), CVector::Unit(3, 1));
}

TEST(Jacobi, MatchesReferenceSolver) {
  std::mt19937_64 rng(1);
  for (Eigen::Index n : {1, 4, 17, 40}) {
    const CMatrix h = random_hermitian(n, rng);
    const auto d = jacobi_hermitian(h);
    Eigen::SelfAdjointEigenSolver<CMatrix> ref(h);
    EXPECT_LE((d.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, h.norm()));
    EXPECT_LE((h * d.vectors - d.vectors * d.values.cast<cplx>().asDiagonal()).norm(), 1e-11 * h.norm());
    EXPECT_LE((d.vectors.adjoint() * d.vectors - CMatrix::Identity(n, n)).norm(), 1e-12 * n);
  }
}

TEST(Jacobi, DegenerateSpectrum) {
  std::mt19937_64 rng(2);
  Eigen::HouseholderQR<CMatrix> qr(random_hermitian(6, rng) + CMatrix::Identity(6, 6) * cplx(0, 1));
  const CMatrix u = qr.householderQ();
  RVector lam(6);
  lam << 1, 1, 1, 2, 2, 5;
  const CMatrix h = u * lam.cast<cplx>().asDiagonal() * u.adjoint();
  const auto d = jacobi_hermitian(h);
  EXPECT_LE((d.values - lam).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((d.vectors.adjoint() * d.vectors - CMatrix::Identity(6, 6)).norm(), 1e-12);
}

TEST(Jacobi, PhaseConvention) {
  std::mt19937_64 rng(3);
  const auto d = jacobi_hermitian(random_hermitian(8, rng));
  for (Eigen::Index j = 0; j < 8; ++j) {
    Eigen::Index big = 0;
    d.vectors.col(j).cwiseAbs().maxCoeff(&big);
    EXPECT_EQ(d.vectors(big, j).imag(), 0.0);
    EXPECT_GT(d.vectors(big, j).real(), 0.0);
  }
}

TEST(Jacobi, Errors) {
  CMatrix h(2, 2);
  h << 1, cplx(0, 1), cplx(0, 1), 1;
  EXPECT_THROW(jacobi_hermitian(h), InvalidArgument);
  EXPECT_THROW(jacobi_hermitian(CMatrix::Zero(2, 3)), InvalidArgument);
  std::mt19937_64 rng(4);
  EXPECT_THROW(jacobi_hermitian(random_hermitian(5, rng), 1e-13, 0), NonConvergence);
}
