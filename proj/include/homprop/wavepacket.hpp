#pragma once

#include "homprop/errors.hpp"
#include "homprop/linalg.hpp"

#include <cmath>
#include <random>

namespace homprop {

/// Uniform grid x_i = origin + i * length / n_points, i in [0, n_points).
struct Grid1D {
  std::size_t n_points = 0;
  double length = 1.0;
  double origin = 0.0;

  Grid1D() = default;
  Grid1D(std::size_t n, double len, double orig = 0.0) : n_points(n), length(len), origin(orig) {
    if (n < 8 || !is_power_of_two(n))
      throw InvalidArgument("grid size must be a power of two >= 8, got " + std::to_string(n));
    if (!(len > 0.0))
      throw InvalidArgument("grid length must be positive");
  }

  double spacing() const { return length / static_cast<double>(n_points); }
  double x(std::size_t i) const { return origin + static_cast<double>(i) * spacing(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(n_points); }

  friend bool operator==(const Grid1D &, const Grid1D &) = default;
};

/// Complex amplitudes on a grid; norm is sum |psi|^2 dx.
struct Wavepacket {
  Grid1D grid;
  CVector amp;

  Wavepacket() = default;
  Wavepacket(Grid1D g, CVector a) : grid(g), amp(std::move(a)) {
    if (amp.size() != grid.size())
      throw DimensionMismatch("amplitude count does not match grid");
  }
  explicit Wavepacket(Grid1D g) : grid(g), amp(CVector::Zero(g.size())) {}

  double norm_squared() const { return amp.squaredNorm() * grid.spacing(); }
  double norm() const { return std::sqrt(norm_squared()); }
};

inline cplx inner(const Wavepacket &a, const Wavepacket &b) {
  if (!(a.grid == b.grid))
    throw DimensionMismatch("inner product of packets on different grids");
  return a.amp.dot(b.amp) * a.grid.spacing();
}

inline double l2_distance(const Wavepacket &a, const Wavepacket &b) {
  if (!(a.grid == b.grid))
    throw DimensionMismatch("distance between packets on different grids");
  return (a.amp - b.amp).norm() * std::sqrt(a.grid.spacing());
}

/// Normalized Gaussian with |psi|^2 of standard deviation sigma, mean
/// momentum p0: (2 pi sigma^2)^(-1/4) exp(-(x-x0)^2 / (4 sigma^2) + i p0 (x-x0)).
inline cplx gaussian_value(double x, double x0, double sigma, double p0) {
  const double d = x - x0;
  const double amp = std::pow(two_pi * sigma * sigma, -0.25) * std::exp(-d * d / (4 * sigma * sigma));
  return amp * cis(p0 * d);
}

inline Wavepacket gaussian_line(const Grid1D &grid, double x0, double sigma, double p0 = 0.0) {
  Wavepacket w(grid);
  for (std::size_t i = 0; i < grid.n_points; ++i)
    w.amp[static_cast<Eigen::Index>(i)] = gaussian_value(grid.x(i), x0, sigma, p0);
  return w;
}

/// Ring packet with twisted boundary condition psi(x + L) = e^{i theta} psi(x),
/// built as the twisted periodization sum_m e^{i m theta} g(x - m L) of the
/// line Gaussian g. It is the fold of g onto the ring, so evolving g on the
/// covering line and folding reproduces the ring evolution exactly.
inline Wavepacket ring_gaussian(const Grid1D &grid, double x0, double sigma, double theta, double p0 = 0.0) {
  const double L = grid.length;
  // images farther than ~55 sigma contribute below double underflow
  const long reach = static_cast<long>(std::ceil((55.0 * sigma + std::abs(x0 - grid.origin) + L) / L)) + 1;
  Wavepacket w(grid);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    cplx acc = 0;
    for (long m = -reach; m <= reach; ++m)
      acc += cis(static_cast<double>(m) * theta) * gaussian_value(grid.x(i) - static_cast<double>(m) * L, x0, sigma, p0);
    w.amp[static_cast<Eigen::Index>(i)] = acc;
  }
  return w;
}

inline Wavepacket normalized(Wavepacket w) {
  const double n = w.norm();
  if (!(n > 0.0))
    throw InvalidArgument("cannot normalize a zero packet");
  w.amp /= n;
  return w;
}

/// Covering-line grid aligned with a ring grid: same spacing, n_cells copies
/// of the cell, cell 0 placed at index offset n_cells / 2.
inline Grid1D covering_line_grid(const Grid1D &ring, std::size_t n_cells) {
  if (!is_power_of_two(n_cells))
    throw InvalidArgument("number of covering cells must be a power of two");
  return Grid1D(ring.n_points * n_cells, ring.length * static_cast<double>(n_cells),
                ring.origin - static_cast<double>(n_cells / 2) * ring.length);
}

/// Embeds a cell packet into an aligned covering-line grid (zero outside).
inline Wavepacket embed_in_line(const Wavepacket &cell, const Grid1D &line) {
  const std::size_t n = cell.grid.n_points;
  if (line.n_points % n != 0 || line.spacing() != cell.grid.spacing())
    throw DimensionMismatch("line grid is not aligned with the cell grid");
  const std::size_t cells = line.n_points / n;
  Wavepacket out(line);
  out.amp.segment(static_cast<Eigen::Index>((cells / 2) * n), static_cast<Eigen::Index>(n)) = cell.amp;
  return out;
}

/// Restriction of a line packet to the image cell + shift * L, as a cell packet.
inline Wavepacket read_cell(const Wavepacket &line, const Grid1D &cell, long shift) {
  const std::size_t n = cell.n_points;
  const long cells = static_cast<long>(line.grid.n_points / n);
  const long q = shift + cells / 2;
  if (q < 0 || q >= cells)
    throw InvalidArgument("requested image cell lies outside the covering grid");
  return Wavepacket(cell, line.amp.segment(q * static_cast<long>(n), static_cast<Eigen::Index>(n)));
}

/// psi_ring(x) = sum_n e^{-i n theta} psi_line(x + n L) on an aligned line grid.
inline Wavepacket fold_line_to_ring(const Wavepacket &line, const Grid1D &ring, double theta) {
  const std::size_t n = ring.n_points;
  if (line.grid.n_points % n != 0 || line.grid.spacing() != ring.spacing())
    throw DimensionMismatch("line grid is not aligned with the ring grid");
  const long cells = static_cast<long>(line.grid.n_points / n);
  Wavepacket out(ring);
  for (long q = 0; q < cells; ++q) {
    const long image = q - cells / 2;
    out.amp += cis(-static_cast<double>(image) * theta) *
               line.amp.segment(q * static_cast<long>(n), static_cast<Eigen::Index>(n));
  }
  return out;
}

/// Random ring packet for property checks, concentrated near the middle of
/// the cell so its amplitude at the cell edges is below ~1e-7 of the peak.
template <class Rng>
Wavepacket random_ring_packet(const Grid1D &grid, double theta, Rng &rng, double sigma_lo = 0.045,
                              double sigma_hi = 0.06, double p_max = 4.0) {
  const double L = grid.length;
  std::uniform_real_distribution<double> centre(grid.origin + 0.47 * L, grid.origin + 0.53 * L);
  std::uniform_real_distribution<double> width(sigma_lo * L, sigma_hi * L);
  std::uniform_real_distribution<double> momentum(-p_max / L, p_max / L);
  const double x0 = centre(rng);
  const double s = width(rng);
  const double p = momentum(rng);
  return normalized(ring_gaussian(grid, x0, s, theta, p));
}

} // namespace homprop
