#pragma once

#include "homprop/wavepacket.hpp"

namespace homprop {

/// Dense propagator on grids. Entries already carry the source quadrature
/// weight, weights(i, j) = K(x_i, t_f, y_j, t_i) * dy, so applying the kernel
/// is a plain matrix-vector product.
struct DenseKernel {
  Grid1D target;
  Grid1D source;
  CMatrix weights;
  double t_i = 0.0;
  double t_f = 0.0;
  double theta = 0.0;

  Wavepacket apply(const Wavepacket &psi) const {
    if (!(psi.grid == source))
      throw DimensionMismatch("packet grid does not match kernel source grid");
    return Wavepacket(target, weights * psi.amp);
  }
};

/// Toeplitz matrix with entries T(i - j), stored at offset (i - j) + n - 1.
inline CMatrix toeplitz_dense(const CVector &diagonals, Eigen::Index n) {
  CMatrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      m(i, j) = diagonals[i - j + n - 1];
  return m;
}

inline CVector toeplitz_apply(const CVector &diagonals, const CVector &v) {
  const Eigen::Index n = v.size();
  CVector out = CVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx acc = 0;
    const cplx *row = diagonals.data() + i + n - 1;
    for (Eigen::Index j = 0; j < n; ++j)
      acc += row[-j] * v[j];
    out[i] = acc;
  }
  return out;
}

} // namespace homprop
