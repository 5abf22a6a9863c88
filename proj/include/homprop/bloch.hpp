#pragma once

// One-dimensional crystal: plane-wave Bloch Hamiltonians H_k = H(p + k, x),
// bands, the fibered propagators K_k, their Brillouin-zone Fourier
// coefficients K_R, and the comparison of K_R with the covering-line
// propagator Kbar(x + R, y).

#include "homprop/errors.hpp"
#include "homprop/jacobi.hpp"
#include "homprop/kernel.hpp"
#include "homprop/parallel.hpp"
#include "homprop/propagator.hpp"

#include "json.hpp"

#include <map>

namespace homprop {

/// V(x) = sum_g V_g e^{2 pi i g x / a}, with V_{-g} = conj(V_g).
struct PeriodicPotential {
  double period = 1.0;
  std::map<long, cplx> coeffs;

  static PeriodicPotential free(double a = 1.0) { return {a, {}}; }

  /// 2 V1 cos(2 pi x / a), i.e. V_{+1} = V_{-1} = V1.
  static PeriodicPotential cosine(double V1, double a = 1.0) {
    PeriodicPotential p{a, {}};
    if (V1 != 0.0) {
      p.coeffs[1] = V1;
      p.coeffs[-1] = V1;
    }
    return p;
  }

  void validate() const {
    if (!(period > 0.0))
      throw InvalidArgument("lattice period must be positive");
    for (const auto &[g, v] : coeffs) {
      const auto it = coeffs.find(-g);
      const cplx partner = it == coeffs.end() ? cplx{0.0} : it->second;
      if (std::abs(partner - std::conj(v)) > 1e-14 * std::max(1.0, std::abs(v)))
        throw InvalidArgument("potential coefficients violate V_{-g} = conj(V_g) at g = " + std::to_string(g));
    }
  }

  long support() const {
    long s = 0;
    for (const auto &[g, v] : coeffs)
      if (v != cplx{0.0})
        s = std::max(s, std::abs(g));
    return s;
  }

  cplx coefficient(long g) const {
    const auto it = coeffs.find(g);
    return it == coeffs.end() ? cplx{0.0} : it->second;
  }

  double operator()(double x) const {
    double v = 0.0;
    for (const auto &[g, c] : coeffs)
      v += (c * cis(two_pi * static_cast<double>(g) * x / period)).real();
    return v;
  }

  bool is_free() const { return support() == 0 && coefficient(0) == cplx{0.0}; }
};

/// Plane-wave matrix over g in [-G_max, G_max]: diagonal (k + 2 pi g / a)^2 / 2,
/// off-diagonal V_{g - g'}.
inline CMatrix build_hk_matrix(const PeriodicPotential &pot, double k, long G_max) {
  pot.validate();
  if (G_max < pot.support() + 2)
    throw InvalidArgument("plane-wave cutoff G_max = " + std::to_string(G_max) +
                          " is below the potential support + 2");
  const long n = 2 * G_max + 1;
  CMatrix H = CMatrix::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    const long gi = i - G_max;
    const double kappa = k + two_pi * static_cast<double>(gi) / pot.period;
    for (long j = 0; j < n; ++j)
      H(i, j) = pot.coefficient(gi - (j - G_max));
    H(i, i) += 0.5 * kappa * kappa;
  }
  return H;
}

inline EigenDecomposition solve_bands(const CMatrix &H_k) { return jacobi_hermitian(H_k); }

/// Bands and plane-wave eigenvectors at one quasimomentum.
struct BlochSolution {
  double k = 0.0;
  long G_max = 0;
  double period = 1.0;
  RVector energies;
  CMatrix vectors;  // column sigma: coefficients c_g, g = -G_max..G_max

  Eigen::Index band_count() const { return energies.size(); }

  /// Periodic Bloch function u(x) = sum_g c_g e^{2 pi i g x / a} / sqrt(a).
  cplx u(Eigen::Index sigma, double x) const {
    cplx acc = 0;
    for (long i = 0; i < vectors.rows(); ++i)
      acc += vectors(i, sigma) * cis(two_pi * static_cast<double>(i - G_max) * x / period);
    return acc / std::sqrt(period);
  }

  /// phi(x) = e^{i k x} u(x)
  cplx phi(Eigen::Index sigma, double x) const { return cis(k * x) * u(sigma, x); }

  /// Matrix of phi_sigma(x_i) (or u_sigma(x_i)) for sigma < n_bands.
  CMatrix sample(const Grid1D &grid, Eigen::Index n_bands, bool bloch_function = false) const {
    CMatrix P(grid.size(), n_bands);
    CMatrix waves(grid.size(), vectors.rows());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const double x = grid.x(static_cast<std::size_t>(i));
      for (long g = 0; g < vectors.rows(); ++g)
        waves(i, g) = cis((bloch_function ? 0.0 : k) * x + two_pi * static_cast<double>(g - G_max) * x / period);
    }
    P = waves * vectors.leftCols(n_bands) / std::sqrt(period);
    return P;
  }
};

inline BlochSolution solve_bloch(const PeriodicPotential &pot, double k, long G_max) {
  const auto eig = solve_bands(build_hk_matrix(pot, k, G_max));
  return {k, G_max, pot.period, eig.values, eig.vectors};
}

/// Fraction of a cell packet's mass captured by the first n_bands Bloch states.
inline double band_mass_captured(const BlochSolution &sol, Eigen::Index n_bands, const Wavepacket &ref) {
  const CMatrix P = sol.sample(ref.grid, n_bands);
  const CVector c = P.adjoint() * ref.amp * ref.grid.spacing();
  return c.squaredNorm() / ref.norm_squared();
}

enum class KernelForm { Wavefunction, BlochFunction };

/// K_k(x_i, y_j, t) dy = sum_sigma phi(x_i) phi*(y_j) e^{-i t E_sigma} dy.
/// The BlochFunction form builds the same sum from u and e^{i k (x - y)}.
inline DenseKernel kk_kernel(const BlochSolution &sol, double t, const Grid1D &target, const Grid1D &source,
                             Eigen::Index n_bands, KernelForm form = KernelForm::Wavefunction) {
  if (n_bands < 1 || n_bands > sol.band_count())
    throw InvalidArgument("n_bands must lie in [1, matrix size]");
  CVector phase(n_bands);
  for (Eigen::Index s = 0; s < n_bands; ++s)
    phase[s] = cis(-t * sol.energies[s]);
  DenseKernel K{target, source, {}, 0.0, t, sol.k * sol.period};
  if (form == KernelForm::Wavefunction) {
    const CMatrix Px = sol.sample(target, n_bands);
    const CMatrix Py = sol.sample(source, n_bands);
    K.weights = (Px * phase.asDiagonal() * Py.adjoint()) * source.spacing();
  } else {
    const CMatrix Ux = sol.sample(target, n_bands, true);
    const CMatrix Uy = sol.sample(source, n_bands, true);
    K.weights = (Ux * phase.asDiagonal() * Uy.adjoint()) * source.spacing();
    for (Eigen::Index j = 0; j < K.weights.cols(); ++j)
      for (Eigen::Index i = 0; i < K.weights.rows(); ++i)
        K.weights(i, j) *= cis(sol.k * (target.x(static_cast<std::size_t>(i)) - source.x(static_cast<std::size_t>(j))));
  }
  return K;
}

struct KkKernel {
  DenseKernel kernel;
  double captured_mass = 1.0;
  bool truncated = false;
};

/// K_k on a cell grid with a band-truncation diagnostic against a reference
/// packet (warning when less than 1 - 1e-10 of its mass is captured).
inline KkKernel kk_kernel(const PeriodicPotential &pot, double k, double t, const Grid1D &grid, Eigen::Index n_bands,
                          long G_max, const Wavepacket *reference = nullptr) {
  const auto sol = solve_bloch(pot, k, G_max);
  KkKernel out{kk_kernel(sol, t, grid, grid, n_bands), 1.0, false};
  if (reference) {
    out.captured_mass = band_mass_captured(sol, n_bands, *reference);
    out.truncated = out.captured_mass < 1.0 - 1e-10;
  }
  return out;
}

/// Default plane-wave cutoff: support + 8, doubled while the reference packet
/// loses more than 1e-10 of its mass, capped so the plane waves stay
/// resolvable on the grid (2 G + 1 <= grid points).
inline long choose_band_cutoff(const PeriodicPotential &pot, const Wavepacket &reference, double k = 0.0) {
  const long cap = static_cast<long>(reference.grid.n_points - 1) / 2;
  long G = std::min(pot.support() + 8, cap);
  while (true) {
    const auto sol = solve_bloch(pot, k, G);
    if (band_mass_captured(sol, sol.band_count(), reference) >= 1.0 - 1e-10 || G >= cap)
      return G;
    G = std::min(2 * G, cap);
  }
}

/// Equispaced k nodes over [-pi/a, pi/a), k_m = -pi/a + (m + offset) 2 pi / (a M).
struct BZQuadrature {
  int M = 1;
  double offset = 0.0;
  double period = 1.0;

  double volume() const { return two_pi / period; }
  double weight() const { return volume() / M; }
  double node(int m) const { return -pi / period + (m + offset) * two_pi / (period * M); }
};

/// K_R = (1/v) int_BZ K_k e^{i k R} dk by the trapezoid rule, for every
/// R = m a with m in `cells`. Result kernels map source -> target grid.
inline std::map<long, DenseKernel> kr_kernels_bz(const PeriodicPotential &pot, const std::vector<long> &cells,
                                                 double t, const Grid1D &target, const Grid1D &source,
                                                 const BZQuadrature &quad, long G_max, Eigen::Index n_bands = -1,
                                                 int workers = 1) {
  long m_max = 0;
  for (long m : cells)
    m_max = std::max(m_max, std::abs(m));
  if (quad.M < 2 * m_max + 1)
    throw Aliasing("BZ quadrature with M = " + std::to_string(quad.M) + " nodes cannot resolve |R| = " +
                   std::to_string(m_max) + " a");
  const Eigen::Index nb = n_bands < 0 ? 2 * G_max + 1 : n_bands;
  std::map<long, DenseKernel> out;
  for (long m : cells)
    out[m] = {target, source, CMatrix::Zero(target.size(), source.size()), 0.0, t, 0.0};

  const int chunk = std::max(workers, 1);
  for (int start = 0; start < quad.M; start += chunk) {
    const int stop = std::min(quad.M, start + chunk);
    std::vector<DenseKernel> batch(static_cast<std::size_t>(stop - start));
    parallel_for(batch.size(), workers, [&](std::size_t i) {
      const double k = quad.node(start + static_cast<int>(i));
      batch[i] = kk_kernel(solve_bloch(pot, k, G_max), t, target, source, nb);
    });
    for (int q = start; q < stop; ++q) {
      const double k = quad.node(q);
      for (auto &[m, K] : out)
        K.weights += (cis(k * static_cast<double>(m) * pot.period) * (quad.weight() / quad.volume())) *
                     batch[static_cast<std::size_t>(q - start)].weights;
    }
  }
  return out;
}

inline DenseKernel kr_kernel_bz(const PeriodicPotential &pot, long m, double t, const Grid1D &grid,
                                const BZQuadrature &quad, long G_max, int workers = 1) {
  return kr_kernels_bz(pot, {m}, t, grid, grid, quad, G_max, -1, workers).at(m);
}

struct KbarCheckOptions {
  std::size_t cell_points = 32;
  std::size_t line_cells = 128;
  int bz_nodes = 128;
  long G_max = 15;
  int n_steps = 10000;
  double sigma = 0.05;  // test packet width, in units of a
  double x0 = 0.5;      // test packet centre, in units of a
  double tolerance = 1e-6;
  int workers = 1;
};

struct KbarCheckResult {
  bool pass = true;
  std::map<long, double> defects;  // R / a -> L2 discrepancy
  double packet_mass_captured = 1.0;

  nlohmann::json to_json() const {
    nlohmann::json d = nlohmann::json::object();
    for (const auto &[m, v] : defects)
      d[std::to_string(m)] = v;
    return {{"pass", pass}, {"defects", d}, {"packet_mass_captured", packet_mass_captured}};
  }
};

/// Compares K_R applied to a cell packet with the covering-line evolution of
/// the same packet (split operator with the periodic potential), read out on
/// the image cell displaced by R.
inline KbarCheckResult verify_kbar_equality(const PeriodicPotential &pot, const std::vector<long> &cells, double t,
                                            const KbarCheckOptions &opt = {}) {
  const double a = pot.period;
  const Grid1D cell(opt.cell_points, a, 0.0);
  if (2 * opt.G_max + 1 > static_cast<long>(opt.cell_points))
    throw InvalidArgument("plane-wave cutoff not resolvable on the cell grid");
  const auto psi = normalized(gaussian_line(cell, opt.x0 * a, opt.sigma * a));

  KbarCheckResult r;
  r.packet_mass_captured = band_mass_captured(solve_bloch(pot, 0.0, opt.G_max), 2 * opt.G_max + 1, psi);

  const BZQuadrature quad{opt.bz_nodes, 0.0, a};
  const auto kr = kr_kernels_bz(pot, cells, t, cell, cell, quad, opt.G_max, -1, opt.workers);

  const auto line = covering_line_grid(cell, opt.line_cells);
  const auto psi_line = embed_in_line(psi, line);
  LinePotential V;
  if (!pot.is_free())
    V = [&pot](double x) { return pot(x); };
  const auto evolved = split_step_propagate_line(psi_line, V, t, V ? opt.n_steps : 1);

  for (long m : cells) {
    const double d = l2_distance(kr.at(m).apply(psi), read_cell(evolved, cell, m));
    r.defects[m] = d;
    if (!(d <= opt.tolerance))
      r.pass = false;
  }
  return r;
}

} // namespace homprop
