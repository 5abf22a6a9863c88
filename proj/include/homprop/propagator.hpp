#pragma once

// Quantum evolution on the circle of length L (hbar = m = 1) by three
// independent routes: twisted-mode spectral sums, winding-image sums of the
// covering-line propagator weighted by E(n) = e^{-i n theta}, and split-operator
// stepping on the covering line followed by folding.

#include "homprop/covering_space.hpp"
#include "homprop/fft.hpp"
#include "homprop/group_algebra.hpp"
#include "homprop/kernel.hpp"
#include "homprop/parallel.hpp"
#include "homprop/wavepacket.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace homprop {

// ---------------------------------------------------------------------------
// Covering-line propagator and classical action

/// Free propagator on the line, sqrt(1/(2 pi i dt)) exp(i (xf - xi)^2 / (2 dt)),
/// principal branch e^{-i pi/4 sign(dt)} / sqrt(2 pi |dt|).
inline cplx free_line_kernel(double x_f, double x_i, double dt) {
  if (dt == 0.0)
    throw DeltaLimit("free kernel at dt = 0 is a delta distribution; apply the identity instead");
  const double d = x_f - x_i;
  const double prefactor = 1.0 / std::sqrt(two_pi * std::abs(dt));
  return prefactor * cis(-0.25 * pi * (dt > 0 ? 1.0 : -1.0) + d * d / (2.0 * dt));
}

using PathPotential = std::function<double(const Point &)>;

/// Discretized action sum_k [ |dx_k|^2 / (2 dt_k) - V(midpoint_k) dt_k ] with
/// minimal-image displacements. A path with decreasing times is the inverse
/// path and yields the negated action.
inline double action_of_path(const DiscretePath &p, const TorusCoveringModel &model,
                             const PathPotential &potential = {}) {
  validate_path(p, model);
  const auto steps = path_displacements(p, model);
  CompensatedSum s;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const double dt = p.times[k + 1] - p.times[k];
    double dx2 = 0.0;
    for (double d : steps[k])
      dx2 += d * d;
    s.add(dx2 / (2.0 * dt));
    if (potential) {
      Point mid = p.samples[k];
      for (std::size_t j = 0; j < mid.size(); ++j)
        mid[j] += 0.5 * steps[k][j];
      s.add(-potential(mid) * dt);
    }
  }
  return s.value();
}

// ---------------------------------------------------------------------------
// Spectral route

struct SpectralEvolution {
  Wavepacket psi;
  /// Fraction of |psi|^2 carried by twisted modes beyond n_max (discarded).
  double tail_mass = 0.0;
  bool truncated = false;
};

inline double ring_mode_energy(long n, double theta, double L) {
  const double kappa = (two_pi * static_cast<double>(n) + theta) / L;
  return 0.5 * kappa * kappa;
}

/// Expands psi in phi_n(x) = e^{i (2 pi n + theta) x / L} / sqrt(L), which obey
/// phi(x + L) = e^{i theta} phi(x), advances each by e^{-i E_n t} and
/// resynthesizes. n_max < 0 keeps every mode the grid resolves.
inline SpectralEvolution spectral_evolve_ring(const Wavepacket &psi, double theta, double t, long n_max = -1) {
  const double norm2 = psi.norm_squared();
  if (!(norm2 > 0.0))
    throw InvalidArgument("spectral evolution needs a packet with positive norm");
  if (n_max == 0)
    throw InvalidArgument("n_max must be at least 1");
  const auto &g = psi.grid;
  const double L = g.length;
  const double th = wrap_angle(theta);
  const std::size_t n = g.n_points;

  CVector c(g.size());
  for (std::size_t j = 0; j < n; ++j)
    c[static_cast<Eigen::Index>(j)] = cis(-th * g.x(j) / L) * psi.amp[static_cast<Eigen::Index>(j)];
  Fft fft(n);
  fft.forward(c);

  const double total = c.squaredNorm();
  double tail = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const long mode = fft_index(m, n);
    const auto idx = static_cast<Eigen::Index>(m);
    if (n_max > 0 && std::abs(mode) > n_max) {
      tail += std::norm(c[idx]);
      c[idx] = 0;
      continue;
    }
    c[idx] *= cis(-ring_mode_energy(mode, th, L) * t);
  }
  fft.backward(c);
  SpectralEvolution out{Wavepacket(g), tail / total, false};
  out.truncated = out.tail_mass > 1e-12;
  for (std::size_t j = 0; j < n; ++j)
    out.psi.amp[static_cast<Eigen::Index>(j)] =
        cis(th * g.x(j) / L) * c[static_cast<Eigen::Index>(j)] / static_cast<double>(n);
  return out;
}

inline Wavepacket spectral_propagate_ring(const Wavepacket &psi, double theta, double t, long n_max = -1) {
  return spectral_evolve_ring(psi, theta, t, n_max).psi;
}

/// Dense matrix of the spectral ring evolution over the same mode set.
inline DenseKernel spectral_ring_kernel(const Grid1D &grid, double theta, double t, long n_max = -1) {
  const double L = grid.length;
  const double th = wrap_angle(theta);
  const auto n = static_cast<long>(grid.n_points);
  std::vector<long> modes;
  for (long m = 0; m < n; ++m) {
    const long mode = fft_index(static_cast<std::size_t>(m), grid.n_points);
    if (n_max < 0 || std::abs(mode) <= n_max)
      modes.push_back(mode);
  }
  std::vector<cplx> phase(modes.size());
  for (std::size_t q = 0; q < modes.size(); ++q)
    phase[q] = cis(-ring_mode_energy(modes[q], th, L) * t);
  const double h = grid.spacing();
  CVector diag(2 * n - 1);
  for (long d = -(n - 1); d <= n - 1; ++d) {
    cplx acc = 0;
    for (std::size_t q = 0; q < modes.size(); ++q)
      acc += phase[q] * cis((two_pi * static_cast<double>(modes[q]) + th) * static_cast<double>(d) * h / L);
    diag[d + n - 1] = acc * h / L;
  }
  return {grid, grid, toeplitz_dense(diag, n), 0.0, t, theta};
}

// ---------------------------------------------------------------------------
// Winding-image route

struct ImageSumOptions {
  /// Fixed winding cutoff N; negative selects the smallest certified N.
  long winding_cutoff = -1;
  /// Throw CutoffTooSmall when the last retained terms exceed 1e-3 of the total.
  bool certify = true;
  long max_cutoff = 2000;
};

struct ImageSumEvolution {
  Wavepacket psi;
  long cutoff = 0;
  /// ||T_n|| for n = -cutoff..cutoff, where T_n is the n-th winding term.
  std::vector<double> term_norms;
  /// max(||T_N||, ||T_-N||) / ||sum||
  double tail_ratio = 0.0;
};

inline constexpr double image_sum_tail_limit = 1e-3;
inline constexpr double image_sum_auto_ratio = 1e-12;

inline std::string format_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

/// Largest N for which every image kernel Kbar(x + n L, y, t), |n| <= N,
/// oscillates slower than the grid Nyquist rate over the cell:
/// (N + 1) L / |t| <= pi / h.
inline long resolved_winding_cutoff(const Grid1D &grid, double t) {
  return static_cast<long>(std::floor(pi * std::abs(t) / (grid.spacing() * grid.length))) - 1;
}

namespace detail {
/// Diagonals of the sector-n kernel h * Kbar(x_i + n L, y_j, t) on a grid.
inline CVector image_diagonals(const Grid1D &grid, long n, double t) {
  const auto np = static_cast<long>(grid.n_points);
  const double h = grid.spacing();
  const double shift = static_cast<double>(n) * grid.length;
  CVector diag(2 * np - 1);
  for (long d = -(np - 1); d <= np - 1; ++d)
    diag[d + np - 1] = h * free_line_kernel(static_cast<double>(d) * h + shift, 0.0, t);
  return diag;
}
} // namespace detail

/// psi_out(x) = sum_{|n|<=N} e^{-i n theta} int_cell Kbar(x + n L, y, t) psi(y) dy,
/// with the integral done by the periodic trapezoid rule on the grid.
inline ImageSumEvolution image_sum_evolve_ring(const Wavepacket &psi, double theta, double t,
                                               const ImageSumOptions &opt = {}) {
  if (t == 0.0)
    throw DeltaLimit("image sum at t = 0 is the identity; no kernel to sum");
  if (opt.winding_cutoff == 0 && opt.certify)
    throw InvalidArgument("a single winding sector cannot be certified; disable certification");
  const double psi_norm = psi.norm();
  if (!(psi_norm > 0.0))
    throw InvalidArgument("image sum needs a packet with positive norm");
  const auto &g = psi.grid;
  const double sqrt_h = std::sqrt(g.spacing());

  ImageSumEvolution out{Wavepacket(g), 0, {}, 0.0};
  std::vector<double> neg, pos; // term norms for -n and +n
  auto term = [&](long n) {
    CVector v = toeplitz_apply(detail::image_diagonals(g, n, t), psi.amp);
    return v;
  };
  CVector sum = term(0);
  pos.push_back(sum.norm() * sqrt_h);
  neg.push_back(pos.back());

  const bool fixed = opt.winding_cutoff >= 0;
  const long resolved = resolved_winding_cutoff(g, t);
  if (fixed && opt.certify && opt.winding_cutoff > resolved)
    throw Aliasing("winding cutoff N = " + std::to_string(opt.winding_cutoff) + " exceeds the " +
                   std::to_string(resolved) + " images the grid resolves at t = " + format_time(t));
  const long limit = fixed ? opt.winding_cutoff : std::min(opt.max_cutoff, resolved);
  long quiet_streak = 0;
  long N = 0;
  for (long n = 1; n <= limit; ++n) {
    const CVector tp = term(n);
    const CVector tm = term(-n);
    sum += cis(-static_cast<double>(n) * theta) * tp + cis(static_cast<double>(n) * theta) * tm;
    pos.push_back(tp.norm() * sqrt_h);
    neg.push_back(tm.norm() * sqrt_h);
    N = n;
    if (!fixed) {
      const double s = sum.norm() * sqrt_h;
      const double last = std::max(pos.back(), neg.back());
      quiet_streak = (last < image_sum_auto_ratio * s && s > 0.9 * psi_norm) ? quiet_streak + 1 : 0;
      if (quiet_streak >= 2)
        break;
    }
  }
  const double s = sum.norm() * sqrt_h;
  out.cutoff = N;
  out.tail_ratio = s > 0 ? std::max(pos.back(), neg.back()) / s : std::numeric_limits<double>::infinity();
  if (!fixed && quiet_streak < 2)
    throw CutoffTooSmall("no certified winding cutoff up to N = " + std::to_string(limit));
  if (opt.certify && out.tail_ratio > image_sum_tail_limit) {
    std::ostringstream os;
    os << "winding cutoff N = " << N << " too small: last term carries " << out.tail_ratio
       << " of the total norm (limit " << image_sum_tail_limit << ")";
    throw CutoffTooSmall(os.str());
  }
  for (long n = N; n >= 1; --n)
    out.term_norms.push_back(neg[static_cast<std::size_t>(n)]);
  for (long n = 0; n <= N; ++n)
    out.term_norms.push_back(pos[static_cast<std::size_t>(n)]);
  out.psi.amp = std::move(sum);
  return out;
}

inline Wavepacket image_sum_propagate_ring(const Wavepacket &psi, double theta, double t, long winding_cutoff) {
  ImageSumOptions opt;
  opt.winding_cutoff = winding_cutoff;
  return image_sum_evolve_ring(psi, theta, t, opt).psi;
}

/// Dense sector kernel k_n: h * Kbar(x_i + n L, y_j, t).
inline DenseKernel sector_kernel(const Grid1D &grid, long n, double t) {
  if (t == 0.0)
    throw DeltaLimit("sector kernel at t = 0 is a distribution");
  return {grid, grid, toeplitz_dense(detail::image_diagonals(grid, n, t), grid.size()), 0.0, t, 0.0};
}

/// Dense truncated image-sum kernel sum_{|n|<=N} e^{-i n theta} k_n.
inline DenseKernel image_sum_kernel(const Grid1D &grid, double theta, double t, long N) {
  if (t == 0.0)
    throw DeltaLimit("image-sum kernel at t = 0 is a distribution");
  if (N > resolved_winding_cutoff(grid, t))
    throw Aliasing("winding cutoff N = " + std::to_string(N) + " is not resolved by the grid at t = " +
                   format_time(t));
  const auto np = grid.size();
  CVector diag = CVector::Zero(2 * np - 1);
  for (long n = -N; n <= N; ++n)
    diag += cis(-static_cast<double>(n) * theta) * detail::image_diagonals(grid, n, t);
  return {grid, grid, toeplitz_dense(diag, np), 0.0, t, theta};
}

// ---------------------------------------------------------------------------
// Split-operator route on the covering line

using LinePotential = std::function<double(double)>;

struct SplitStepOptions {
  double edge_fraction = 0.1;
  double edge_mass_limit = 1e-12;
  int checkpoints = 10;
};

namespace detail {
inline double edge_mass_fraction(const CVector &amp, double fraction) {
  const auto n = amp.size();
  const auto e = static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(n)));
  const double total = amp.squaredNorm();
  if (!(total > 0.0))
    return 0.0;
  return (amp.head(e).squaredNorm() + amp.tail(e).squaredNorm()) / total;
}

inline void check_edges(const CVector &amp, const SplitStepOptions &opt, double time) {
  const double f = edge_mass_fraction(amp, opt.edge_fraction);
  if (f > opt.edge_mass_limit) {
    std::ostringstream os;
    os << "packet mass " << f << " within " << opt.edge_fraction * 100
       << "% of the grid edges at t = " << time << " (limit " << opt.edge_mass_limit << ")";
    throw ReflectionContamination(os.str());
  }
}
} // namespace detail

/// Strang-split evolution on a large periodic box standing in for the line.
/// With no potential the kinetic propagator is applied exactly.
inline Wavepacket split_step_propagate_line(const Wavepacket &psi, const LinePotential &potential, double t,
                                            int n_steps, const SplitStepOptions &opt = {}) {
  if (n_steps < 1)
    throw InvalidArgument("n_steps must be at least 1");
  const auto &g = psi.grid;
  const std::size_t n = g.n_points;
  detail::check_edges(psi.amp, opt, 0.0);

  RVector k2(g.size());
  for (std::size_t m = 0; m < n; ++m) {
    const double k = two_pi * static_cast<double>(fft_index(m, n)) / g.length;
    k2[static_cast<Eigen::Index>(m)] = k * k;
  }
  Fft fft(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  auto kinetic = [&](CVector &v, double dt) {
    fft.forward(v);
    for (Eigen::Index m = 0; m < v.size(); ++m)
      v[m] *= cis(-0.5 * k2[m] * dt) * inv_n;
    fft.backward(v);
  };

  CVector v = psi.amp;
  const int checkpoints = std::max(opt.checkpoints, 1);
  if (!potential) {
    for (int c = 1; c <= checkpoints; ++c) {
      CVector w = psi.amp;
      const double tc = t * c / checkpoints;
      kinetic(w, tc);
      detail::check_edges(w, opt, tc);
      if (c == checkpoints)
        v = std::move(w);
    }
    return Wavepacket(g, std::move(v));
  }

  const double dt = t / n_steps;
  CVector half(g.size()), full(g.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double V = potential(g.x(i));
    half[static_cast<Eigen::Index>(i)] = cis(-0.5 * V * dt);
    full[static_cast<Eigen::Index>(i)] = cis(-V * dt);
  }
  const int every = std::max(1, n_steps / checkpoints);
  v = v.cwiseProduct(half);
  for (int s = 1; s <= n_steps; ++s) {
    kinetic(v, dt);
    v = v.cwiseProduct(s == n_steps ? half : full);
    if (s % every == 0 && s != n_steps) {
      // undo the pending half step so the check sees the state at s * dt
      detail::check_edges(v.cwiseProduct(half.conjugate()), opt, s * dt);
    }
  }
  detail::check_edges(v, opt, t);
  return Wavepacket(g, std::move(v));
}

/// Number of covering cells (power of two) needed to hold a Gaussian of
/// width sigma after free spreading for |t|, with the 10% edge margins empty.
inline std::size_t covering_cells_for(double sigma, double t, double L, double drift = 0.0) {
  const double st = std::sqrt(sigma * sigma + t * t / (4 * sigma * sigma));
  const double half = 8.0 * st + std::abs(drift) + L;
  return std::max<std::size_t>(4, next_power_of_two(static_cast<std::size_t>(std::ceil(2.0 * half / (0.8 * L)))));
}

// ---------------------------------------------------------------------------
// Axiom checks

using Evolver = std::function<Wavepacket(const Wavepacket &, double duration)>;

struct RingEvolver {
  std::string name;
  double theta = 0.0;
  Evolver evolve;
};

inline RingEvolver spectral_evolver(double theta, long n_max = -1) {
  return {"spectral", theta, [=](const Wavepacket &p, double t) { return spectral_propagate_ring(p, theta, t, n_max); }};
}

inline RingEvolver image_sum_evolver(double theta, long N, bool certify = true) {
  return {"image_sum", theta, [=](const Wavepacket &p, double t) {
            ImageSumOptions o;
            o.winding_cutoff = N;
            o.certify = certify;
            return image_sum_evolve_ring(p, theta, t, o).psi;
          }};
}

inline RingEvolver dense_evolver(std::string name, double theta, std::function<DenseKernel(double)> kernel_at) {
  return {std::move(name), theta, [=](const Wavepacket &p, double t) { return kernel_at(t).apply(p); }};
}

/// Folded split-operator ring evolution (V = 0): the ring packet is unfolded
/// as the line Gaussian it was built from, so this evolver is tied to one
/// packet family and takes its parameters explicitly.
inline Wavepacket split_step_ring_gaussian(const Grid1D &ring, double x0, double sigma, double p0, double theta,
                                           double t) {
  const auto cells = covering_cells_for(sigma, t, ring.length, p0 * t);
  const auto line = covering_line_grid(ring, cells);
  const auto psi_line = gaussian_line(line, x0, sigma, p0);
  const auto evolved = split_step_propagate_line(psi_line, {}, t, 1);
  return fold_line_to_ring(evolved, ring, theta);
}

/// ||U(t1->t2) U(t0->t1) psi - U(t0->t2) psi|| over random packets.
inline CheckReport check_composition(const RingEvolver &ev, const Grid1D &grid, double t0, double t1, double t2,
                                     double tolerance, std::uint64_t seed = 11, int n_packets = 10) {
  if (!(t0 < t1 && t1 < t2))
    throw InvalidArgument("composition check needs t0 < t1 < t2");
  CheckReport r{"composition:" + ev.name, true, 0.0, false, {}};
  std::mt19937_64 rng(seed);
  for (int k = 0; k < n_packets; ++k) {
    const auto psi = random_ring_packet(grid, ev.theta, rng);
    double d;
    std::string why = "packet " + std::to_string(k);
    try {
      const auto two_step = ev.evolve(ev.evolve(psi, t1 - t0), t2 - t1);
      const auto one_step = ev.evolve(psi, t2 - t0);
      d = l2_distance(two_step, one_step);
    } catch (const Error &e) {
      d = std::numeric_limits<double>::infinity();
      why += ": " + std::string(e.what());
    }
    if (!(d <= r.max_defect))
      r.max_defect = d;
    if (!(d <= tolerance)) {
      r.pass = false;
      if (r.witnesses.size() < 4)
        r.witnesses.push_back(why);
    }
  }
  return r;
}

/// Norm preservation on random packets and, when a dense kernel builder is
/// given, K(t)^dagger = K(-t) entrywise.
inline CheckReport check_unitarity_and_conjugation(const RingEvolver &ev, const Grid1D &grid, double t,
                                                   const std::function<DenseKernel(double)> &dense = {},
                                                   double norm_tolerance = 1e-10, double conj_tolerance = 1e-8,
                                                   std::uint64_t seed = 13, int n_packets = 10) {
  CheckReport r{"unitarity:" + ev.name, true, 0.0, false, {}};
  std::mt19937_64 rng(seed);
  for (int k = 0; k < n_packets; ++k) {
    const auto psi = random_ring_packet(grid, ev.theta, rng);
    double d;
    std::string why = "norm drift, packet " + std::to_string(k);
    try {
      d = std::abs(ev.evolve(psi, t).norm() - psi.norm());
    } catch (const Error &e) {
      d = std::numeric_limits<double>::infinity();
      why += ": " + std::string(e.what());
    }
    r.max_defect = std::max(r.max_defect, d);
    if (!(d <= norm_tolerance)) {
      r.pass = false;
      if (r.witnesses.size() < 4)
        r.witnesses.push_back(why);
    }
  }
  if (dense) {
    const auto fwd = dense(t);
    const auto bwd = dense(-t);
    const double d = (fwd.weights.adjoint() - bwd.weights).cwiseAbs().maxCoeff();
    r.max_defect = std::max(r.max_defect, d);
    if (!(d <= conj_tolerance)) {
      r.pass = false;
      r.witnesses.push_back("K(t)^dagger != K(-t)");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Sector kernels from twisted propagators

using ThetaKernelBuilder = std::function<DenseKernel(double theta)>;

struct SectorFamily {
  long cutoff = 0;
  double t = 0.0;
  Grid1D grid;
  std::vector<double> thetas;
  /// kernels[n + cutoff] = k_n
  std::vector<DenseKernel> kernels;

  const DenseKernel &sector(long n) const {
    if (std::abs(n) > cutoff)
      throw InvalidArgument("sector " + std::to_string(n) + " outside the extracted range");
    return kernels[static_cast<std::size_t>(n + cutoff)];
  }

  /// The weights E(n) = e^{-i n theta} as a representation of Z.
  static UnitaryRep weights(double theta) { return bloch_scalar_rep({theta}); }

  /// sum_n E(n) k_n
  DenseKernel reconstruct(double theta) const {
    const auto rep = weights(theta);
    DenseKernel k{grid, grid, CMatrix::Zero(grid.size(), grid.size()), 0.0, t, theta};
    for (long n = -cutoff; n <= cutoff; ++n) {
      GroupWord w{rep.presentation(), {}};
      for (long s = 0; s < std::abs(n); ++s)
        w.letters.push_back({0, n > 0 ? 1 : -1});
      k.weights += rep.eval(w)(0, 0) * sector(n).weights;
    }
    return k;
  }
};

/// Discrete inverse Fourier transform over M equispaced angles
/// theta_m = 2 pi (m + offset) / M: k_n = (1/M) sum_m e^{i n theta_m} K_{theta_m}.
/// Kernels are built in parallel; the transform runs as a matrix product over
/// fixed blocks of angles, so results do not depend on the worker count.
inline SectorFamily extract_sector_kernels(const ThetaKernelBuilder &build, const Grid1D &grid, double t, int M,
                                           long N, double offset = 0.0, int workers = 1) {
  if (M <= 2 * N)
    throw Aliasing("need M > 2N angles to separate sectors |n| <= N (M = " + std::to_string(M) +
                   ", N = " + std::to_string(N) + ")");
  SectorFamily fam;
  fam.cutoff = N;
  fam.t = t;
  fam.grid = grid;
  for (int m = 0; m < M; ++m)
    fam.thetas.push_back(two_pi * (m + offset) / M);

  const Eigen::Index np = grid.size();
  const Eigen::Index entries = np * np;
  const Eigen::Index sectors = 2 * N + 1;
  constexpr int block = 16;
  CMatrix acc = CMatrix::Zero(entries, sectors);
  CMatrix stacked(entries, block);
  for (int start = 0; start < M; start += block) {
    const int stop = std::min(M, start + block);
    const int c = stop - start;
    std::vector<DenseKernel> batch(static_cast<std::size_t>(c));
    parallel_for(batch.size(), workers,
                 [&](std::size_t i) { batch[i] = build(fam.thetas[static_cast<std::size_t>(start) + i]); });
    CMatrix phases(c, sectors);
    for (int i = 0; i < c; ++i) {
      const auto &K = batch[static_cast<std::size_t>(i)];
      if (!(K.source == grid) || !(K.target == grid))
        throw DimensionMismatch("twisted kernel built on the wrong grid");
      stacked.col(i) = Eigen::Map<const CVector>(K.weights.data(), entries);
      for (long n = -N; n <= N; ++n)
        phases(i, n + N) = cis(static_cast<double>(n) * fam.thetas[static_cast<std::size_t>(start + i)]) /
                           static_cast<double>(M);
    }
    acc.noalias() += stacked.leftCols(c) * phases;
  }
  for (long n = -N; n <= N; ++n)
    fam.kernels.push_back({grid, grid, Eigen::Map<const CMatrix>(acc.col(n + N).data(), np, np), 0.0, t, 0.0});
  return fam;
}

/// Least-squares weights w_n with K_theta psi_p ~ sum_n w_n k_n psi_p over a
/// bank of test packets; returns w for n = -N..N.
inline std::vector<cplx> recover_weights(const SectorFamily &fam, const DenseKernel &K_theta,
                                         const std::vector<Wavepacket> &test_packets) {
  const auto np = fam.grid.size();
  const auto rows = np * static_cast<Eigen::Index>(test_packets.size());
  const auto cols = static_cast<Eigen::Index>(2 * fam.cutoff + 1);
  CMatrix A(rows, cols);
  CVector b(rows);
  for (std::size_t p = 0; p < test_packets.size(); ++p) {
    const auto off = static_cast<Eigen::Index>(p) * np;
    b.segment(off, np) = K_theta.apply(test_packets[p]).amp;
    for (long n = -fam.cutoff; n <= fam.cutoff; ++n)
      A.col(n + fam.cutoff).segment(off, np) = fam.sector(n).apply(test_packets[p]).amp;
  }
  const CVector w = A.colPivHouseholderQr().solve(b);
  return {w.data(), w.data() + w.size()};
}

} // namespace homprop
