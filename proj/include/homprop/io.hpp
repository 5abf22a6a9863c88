#pragma once

// File formats shared with downstream tools.
//
// Packet / kernel-column CSV: header "x,re,im", one row per grid point.
// Bands CSV: header "k,E_1,...,E_n".
// Kernel container (little-endian, no padding):
//   uint64 n_points | float64 t_i | float64 t_f | float64 theta |
//   n_points * n_points * (float64 re, float64 im), row-major
// Rows index the target point x_i, columns the source point y_j, and entries
// are the quadrature-weighted kernel K(x_i, y_j) dy.

#include "homprop/bloch.hpp"
#include "homprop/kernel.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <string>

namespace homprop {

static_assert(std::endian::native == std::endian::little, "kernel container assumes a little-endian host");

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_packet_csv(std::ostream &os, const Wavepacket &w) {
  os << "x,re,im\n";
  for (std::size_t i = 0; i < w.grid.n_points; ++i) {
    const auto z = w.amp[static_cast<Eigen::Index>(i)];
    os << format_double(w.grid.x(i)) << ',' << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
  }
}

inline void write_packet_csv(const std::string &path, const Wavepacket &w) {
  std::ofstream os(path);
  if (!os)
    throw InvalidArgument("cannot write " + path);
  write_packet_csv(os, w);
}

inline Wavepacket read_packet_csv(std::istream &is, double length) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("x,re,im", 0) != 0)
    throw InvalidArgument("packet CSV must start with header x,re,im");
  std::vector<double> xs;
  std::vector<cplx> zs;
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    double x, re, im;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &re, &im) != 3)
      throw InvalidArgument("bad packet CSV row: " + line);
    xs.push_back(x);
    zs.emplace_back(re, im);
  }
  if (xs.empty())
    throw InvalidArgument("packet CSV has no rows");
  Wavepacket w(Grid1D(xs.size(), length, xs.front()));
  for (std::size_t i = 0; i < zs.size(); ++i)
    w.amp[static_cast<Eigen::Index>(i)] = zs[i];
  return w;
}

inline void write_kernel_binary(std::ostream &os, const DenseKernel &k) {
  if (k.weights.rows() != k.weights.cols())
    throw DimensionMismatch("kernel container holds square kernels only");
  const std::uint64_t n = static_cast<std::uint64_t>(k.weights.rows());
  os.write(reinterpret_cast<const char *>(&n), sizeof n);
  for (double v : {k.t_i, k.t_f, k.theta})
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
  for (Eigen::Index i = 0; i < k.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < k.weights.cols(); ++j) {
      const double re = k.weights(i, j).real(), im = k.weights(i, j).imag();
      os.write(reinterpret_cast<const char *>(&re), sizeof re);
      os.write(reinterpret_cast<const char *>(&im), sizeof im);
    }
}

inline void write_kernel_binary(const std::string &path, const DenseKernel &k) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw InvalidArgument("cannot write " + path);
  write_kernel_binary(os, k);
}

/// Reads a kernel container; grid geometry is not stored, so the caller
/// supplies it.
inline DenseKernel read_kernel_binary(std::istream &is, const Grid1D &grid) {
  std::uint64_t n = 0;
  double hdr[3];
  is.read(reinterpret_cast<char *>(&n), sizeof n);
  is.read(reinterpret_cast<char *>(hdr), sizeof hdr);
  if (!is)
    throw InvalidArgument("truncated kernel container header");
  if (n != grid.n_points)
    throw DimensionMismatch("kernel container size does not match grid");
  DenseKernel k{grid, grid, CMatrix(grid.size(), grid.size()), hdr[0], hdr[1], hdr[2]};
  for (Eigen::Index i = 0; i < k.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < k.weights.cols(); ++j) {
      double z[2];
      is.read(reinterpret_cast<char *>(z), sizeof z);
      k.weights(i, j) = {z[0], z[1]};
    }
  if (!is)
    throw InvalidArgument("truncated kernel container body");
  return k;
}

inline void write_bands_csv(std::ostream &os, const std::vector<double> &ks, const std::vector<RVector> &energies,
                            Eigen::Index n_bands) {
  os << 'k';
  for (Eigen::Index s = 1; s <= n_bands; ++s)
    os << ",E_" << s;
  os << '\n';
  for (std::size_t i = 0; i < ks.size(); ++i) {
    os << format_double(ks[i]);
    for (Eigen::Index s = 0; s < n_bands; ++s)
      os << ',' << format_double(energies[i][s]);
    os << '\n';
  }
}

} // namespace homprop
