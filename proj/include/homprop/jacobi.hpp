#pragma once

#include "homprop/errors.hpp"
#include "homprop/linalg.hpp"

#include <algorithm>
#include <numeric>

namespace homprop {

struct EigenDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // orthonormal columns
  int sweeps = 0;
};

namespace detail {
inline double off_diagonal_norm(const CMatrix &a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j)
        s += std::norm(a(i, j));
  return std::sqrt(s);
}
} // namespace detail

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Each (p, q) rotation first removes the phase of a_pq with a diagonal
/// unitary, then applies the classical real rotation that zeroes the now-real
/// entry. Sweeps continue until the off-diagonal Frobenius norm falls below
/// rel_tol * ||H||_F. Eigenvectors are phase-fixed so that their
/// largest-magnitude component (first one on ties) is real and positive.
inline EigenDecomposition jacobi_hermitian(const CMatrix &H, double rel_tol = 1e-13, int max_sweeps = 60) {
  if (H.rows() != H.cols())
    throw InvalidArgument("Jacobi needs a square matrix");
  const Eigen::Index n = H.rows();
  const double scale = H.norm();
  if ((H - H.adjoint()).norm() > 1e-12 * std::max(scale, 1.0))
    throw InvalidArgument("Jacobi needs a Hermitian matrix");

  CMatrix a = 0.5 * (H + H.adjoint());
  CMatrix v = CMatrix::Identity(n, n);
  const double target = rel_tol * scale;

  int sweep = 0;
  for (; sweep <= max_sweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) <= target)
      break;
    if (sweep == max_sweeps)
      throw NonConvergence("Jacobi did not converge in " + std::to_string(max_sweeps) + " sweeps");
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double b = std::abs(apq);
        if (b == 0.0)
          continue;
        const cplx phase = std::conj(apq) / b;  // e^{-i phi}
        const double alpha = a(p, p).real();
        const double gamma = a(q, q).real();
        const double theta = (gamma - alpha) / (2.0 * b);
        double t;
        if (std::abs(theta) > 1e150)
          t = 0.5 / theta;
        else
          t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // W = diag(1, e^{-i phi}) * [[c, s], [-s, c]]
        const cplx w00 = c, w01 = s, w10 = -s * phase, w11 = c * phase;

        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * w00 + akq * w10;
          a(k, q) = akp * w01 + akq * w11;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(w00) * apk + std::conj(w10) * aqk;
          a(q, k) = std::conj(w01) * apk + std::conj(w11) * aqk;
        }
        a(p, q) = 0;
        a(q, p) = 0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * w00 + vkq * w10;
          v(k, q) = vkp * w01 + vkq * w11;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });

  EigenDecomposition out{RVector(n), CMatrix(n, n), sweep};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.values[j] = a(src, src).real();
    CVector col = v.col(src);
    Eigen::Index big = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(col[i]) > std::abs(col[big]))
        big = i;
    col *= std::conj(col[big]) / std::abs(col[big]);
    col[big] = std::abs(col[big]);
    out.vectors.col(j) = col;
  }
  return out;
}

} // namespace homprop
