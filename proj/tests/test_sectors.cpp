#include <gtest/gtest.h>

#include "homprop/propagator.hpp"
#include "test_support.hpp"

using namespace homprop;

namespace {
const Grid1D cell(256, 1.0);

ThetaKernelBuilder spectral_builder(double t) {
  return [=](double theta) { return spectral_ring_kernel(cell, theta, t); };
}

std::vector<Wavepacket> test_bank(double sigma, const std::vector<double> &momenta = {0.0}) {
  std::vector<Wavepacket> bank;
  for (double p : momenta)
    for (double x0 : {0.45, 0.5, 0.55})
      bank.push_back(gaussian_line(cell, x0, sigma, p));
  return bank;
}

double max_packet_defect(const DenseKernel &a, const DenseKernel &b, const std::vector<Wavepacket> &bank) {
  double d = 0.0;
  for (const auto &p : bank)
    d = std::max(d, l2_distance(a.apply(p), b.apply(p)));
  return d;
}

const SectorFamily &family_t02() {
  static const SectorFamily fam = extract_sector_kernels(spectral_builder(0.2), cell, 0.2, 64, 31);
  return fam;
}
} // namespace

TEST(Sectors, AliasingRejected) {
  EXPECT_THROW(extract_sector_kernels(spectral_builder(0.2), cell, 0.2, 10, 5), Aliasing);
  EXPECT_NO_THROW(extract_sector_kernels(spectral_builder(0.2), cell, 0.2, 11, 5));
  EXPECT_THROW(family_t02().sector(32), InvalidArgument);
}

TEST(Sectors, OffsetIndependence) {
  const auto shifted = extract_sector_kernels(spectral_builder(0.2), cell, 0.2, 64, 31, 0.5);
  const auto bank = test_bank(0.04);
  double worst = 0.0;
  for (long n = -31; n <= 31; ++n)
    worst = std::max(worst, max_packet_defect(family_t02().sector(n), shifted.sector(n), bank));
  EXPECT_LE(worst, 1e-8);
}

TEST(Sectors, HeldOutReconstruction) {
  const auto bank = test_bank(0.04);
  for (double theta : {0.123, 1.0, 2.5, -3.0}) {
    const auto rebuilt = family_t02().reconstruct(theta);
    EXPECT_LE(max_packet_defect(rebuilt, spectral_ring_kernel(cell, theta, 0.2), bank), 1e-8) << theta;
  }
}

TEST(Sectors, MatchFreeLineImages) {
  const auto bank = test_bank(0.04);
  for (long n = -5; n <= 5; ++n)
    EXPECT_LE(max_packet_defect(family_t02().sector(n), sector_kernel(cell, n, 0.2), bank), 1e-8) << n;
}

TEST(Sectors, ParallelExtractionIsDeterministic) {
  const auto a = extract_sector_kernels(spectral_builder(0.1), cell, 0.1, 16, 4, 0.0, 1);
  const auto b = extract_sector_kernels(spectral_builder(0.1), cell, 0.1, 16, 4, 0.0, 3);
  for (long n = -4; n <= 4; ++n)
    EXPECT_EQ(a.sector(n).weights, b.sector(n).weights);
}

TEST(Sectors, RecoveredWeightsArePhases) {
  const double t = 0.02;
  const auto fam = extract_sector_kernels(spectral_builder(t), cell, t, 64, 31);
  std::vector<double> kicks;
  for (int n = -10; n <= 10; ++n)
    kicks.push_back(n / t);
  const auto bank = test_bank(0.07, kicks);
  for (double theta : {0.0, 0.7, pi, -2.2}) {
    const auto w = recover_weights(fam, spectral_ring_kernel(cell, theta, t), bank);
    double worst = 0.0;
    for (long n = -10; n <= 10; ++n)
      worst = std::max(worst, std::abs(w[static_cast<std::size_t>(n + 31)] - cis(-static_cast<double>(n) * theta)));
    EXPECT_LE(worst, 1e-10) << theta;
  }
}

TEST(Sectors, ShortTimeSectorsActAsShiftedIdentity) {
  const double t = 0.002;
  const auto psi = gaussian_line(cell, 0.5, 0.05);
  Wavepacket line_evolved(cell);
  for (std::size_t i = 0; i < cell.n_points; ++i)
    line_evolved.amp[static_cast<Eigen::Index>(i)] =
        homprop::testing::evolved_gaussian_value(cell.x(i), 0.5, 0.05, 0.0, t);
  EXPECT_LE(l2_distance(sector_kernel(cell, 0, t).apply(psi), line_evolved), 1e-10);
  EXPECT_LE(sector_kernel(cell, 1, t).apply(psi).norm(), 1e-9);
  EXPECT_LE(sector_kernel(cell, -1, t).apply(psi).norm(), 1e-9);
}

TEST(Sectors, AdditiveUnderComposition) {
  const double t1 = 0.01, t2 = 0.015;
  const auto psi = gaussian_line(cell, 0.5, 0.05);
  for (long c : {-1L, 0L, 1L}) {
    Wavepacket sum(cell);
    for (long m = -4; m <= 4; ++m)
      sum.amp += sector_kernel(cell, m, t2).apply(sector_kernel(cell, c - m, t1).apply(psi)).amp;
    EXPECT_LE(l2_distance(sum, sector_kernel(cell, c, t1 + t2).apply(psi)), 1e-7) << c;
  }
}

TEST(Sectors, SingleSectorIsNotAPropagator) {
  const auto psi = normalized(ring_gaussian(cell, 0.5, 0.08, 0.0));
  const auto out = sector_kernel(cell, 0, 1.0).apply(psi);
  EXPECT_GT(std::abs(out.norm() - 1.0), 1e-3);
}
