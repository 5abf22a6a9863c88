// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// INFO lines carry diagnostics that do not decide the verdict.

#include "homprop/homprop.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace homprop;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double tol_rep = 1e-12;
constexpr double tol_three_way = 1e-7;
constexpr double tol_spectral_split = 1e-12;
constexpr double tol_dense_split = 1e-6;
constexpr double tol_norm_drift = 1e-9;
constexpr double tol_sector_offset = 1e-8;
constexpr double tol_held_out = 1e-8;
constexpr double tol_weights = 1e-10;
constexpr double tol_images = 1e-8;
constexpr double min_single_sector_defect = 1e-3;
constexpr double tol_free_bands = 1e-10;
constexpr double gap_fraction = 0.05;
constexpr double tol_twisted_bc = 1e-10;
constexpr double tol_shift = 1e-8;
constexpr double tol_kbar = 1e-6;
constexpr int covering_cases = 10000;

int failures = 0;

struct Outcome {
  bool pass;
  std::string detail;
};

void run(const char *name, double budget_s, const std::function<Outcome()> &body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = budget_s <= 0 || s < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass)
    ++failures;
  std::printf("%s  %-34s %s  [%.2f s%s]\n", pass ? "PASS" : "FAIL", name, o.detail.c_str(), s,
              in_time ? "" : ", over budget");
  std::fflush(stdout);
}

void info(const std::string &line) {
  std::printf("INFO  %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char *f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char *f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome s3_exactness() {
  const auto m = s3_integer_matrices();
  const Eigen::Matrix3i id = Eigen::Matrix3i::Identity();
  bool ok = true;
  for (const auto *e : {&m.e1, &m.e2, &m.e3}) {
    ok = ok && (*e) * (*e) == id && e->trace() == -1 && e->determinant() == 1;
  }
  for (const auto *e : {&m.e_plus, &m.e_minus}) {
    ok = ok && (*e) * (*e) * (*e) == id && e->trace() == 0 && e->determinant() == 1;
  }
  ok = ok && m.e3 == m.e1 * m.e2 * m.e1 && m.e3 == m.e2 * m.e1 * m.e2;
  ok = ok && m.e_plus == m.e1 * m.e2 && m.e_minus == m.e2 * m.e1;
  // words read chronologically: t1 t2 -> E2 E1
  const auto rep = s3_standard_rep();
  const auto p = rep.presentation();
  ok = ok && rep.eval(make_word(p, {1, 2})) == m.e_minus.cast<cplx>();
  ok = ok && rep.eval(make_word(p, {2, 1})) == m.e_plus.cast<cplx>();
  return {ok, "integer identities exact"};
}

CMatrix random_unitary(Eigen::Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a(i) = {g(rng), g(rng)};
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ();
}

Outcome antimorphism_suite() {
  std::mt19937_64 rng(2024);
  std::vector<std::pair<std::string, UnitaryRep>> reps{
      {"S3", s3_standard_rep()},
      {"F2->S3", f2_to_s3_rep()},
      {"Z^2 Bloch", bloch_scalar_rep({0.3, 0.7})},
      {"B4 scalar", braid_scalar_rep(4, {0.9, 0.9, 0.9})},
      {"F3 U(4)", UnitaryRep(GroupPresentation::free(3),
                             {random_unitary(4, rng), random_unitary(4, rng), random_unitary(4, rng)})}};
  double worst = 0.0;
  bool ok = true;
  for (const auto &[name, rep] : reps) {
    const auto h = check_rep_homomorphism(rep, 1000, 17);
    const auto u = check_rep_unitary(rep, 19, 1000);
    ok = ok && h.pass && u.pass && h.max_defect <= tol_rep && u.max_defect <= tol_rep;
    worst = std::max({worst, h.max_defect, u.max_defect});
  }
  return {ok, fmt("5 presentations x 1000 pairs, max defect %.2e (tol %.0e)", worst, tol_rep)};
}

Outcome yang_baxter() {
  const auto uniform = check_yang_baxter(braid_scalar_rep(3, {0.9, 0.9}));
  const double a = 0.9, b = 1.2;
  const auto unequal = check_yang_baxter(braid_scalar_rep(3, {a, b}));
  const double predicted = std::abs(cis(2 * a + b) - cis(a + 2 * b));
  const double mismatch = std::abs(unequal.max_defect - predicted);
  const bool ok = uniform.pass && uniform.max_defect <= tol_rep && !unequal.pass && mismatch <= tol_rep;
  return {ok, fmt("uniform %.2e; unequal defect matches prediction to %.2e", uniform.max_defect, mismatch)};
}

Outcome three_way() {
  const Grid1D ring(1024, 1.0);
  const double sigma = 0.08, x0 = 0.5;
  const long N = 25;
  double worst = 0.0;
  std::string worst_at;
  for (double t : {0.05, 0.2, 1.0}) {
    double worst_t = 0.0, si = 0.0, ss = 0.0, is = 0.0;
    for (double theta : {0.0, pi / 3, pi}) {
      const auto psi = ring_gaussian(ring, x0, sigma, theta);
      ImageSumOptions opt;
      opt.winding_cutoff = N;
      opt.certify = false;
      const auto spec = spectral_propagate_ring(psi, theta, t);
      const auto img = image_sum_evolve_ring(psi, theta, t, opt).psi;
      const auto split = split_step_ring_gaussian(ring, x0, sigma, 0.0, theta, t);
      si = std::max(si, l2_distance(spec, img));
      ss = std::max(ss, l2_distance(spec, split));
      is = std::max(is, l2_distance(img, split));
      worst_t = std::max({worst_t, si, ss, is});
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "three-way t=%.2f: spectral-images %.2e, spectral-split %.2e, images-split %.2e", t, si, ss, is);
    info(buf);
    if (worst_t > worst) {
      worst = worst_t;
      worst_at = fmt("t=%.2f", t);
    }
  }
  // the image-sum error tracks the packet amplitude left at the cell edges
  const double edge = std::exp(-0.25 / (4 * sigma * sigma)) / std::pow(two_pi * sigma * sigma, 0.25);
  info(fmt("sigma=0.08 packet amplitude at the cell edges %.2e (peak %.2f)", edge,
           std::pow(two_pi * sigma * sigma, -0.25)));
  {
    const double s2 = 0.05;
    double w = 0.0;
    for (double t : {0.05, 0.2})
      for (double theta : {0.0, pi / 3, pi}) {
        const auto psi = ring_gaussian(ring, x0, s2, theta);
        w = std::max(w, l2_distance(spectral_propagate_ring(psi, theta, t),
                                    image_sum_propagate_ring(psi, theta, t, N)));
      }
    info(fmt("edge-negligible packet sigma=0.05, t<=0.2: spectral-images max %.2e", w));
  }
  return {worst <= tol_three_way, fmt("sigma=0.08 grid 1024 N=25, max pairwise %.2e", worst) + " at " + worst_at +
                                      fmt(" (tol %.0e)", tol_three_way)};
}

Outcome composition_axioms() {
  const Grid1D ring(256, 1.0);
  double spectral = 0.0;
  for (double theta : {0.0, 1.1, pi}) {
    const auto r = check_composition(spectral_evolver(theta), ring, 0.0, 0.3, 0.7, tol_spectral_split);
    spectral = std::max(spectral, r.max_defect);
  }

  const double theta = 0.9;
  auto dense_spec =
      dense_evolver("spectral_kernel", theta, [&](double t) { return spectral_ring_kernel(ring, theta, t); });
  double dense = check_composition(dense_spec, ring, 0.0, 0.3, 0.7, tol_dense_split).max_defect;

  const Grid1D cell(32, 1.0);
  const auto sol = solve_bloch(PeriodicPotential::cosine(0.05), theta, 15);
  auto dense_bloch =
      dense_evolver("bloch_kernel", theta, [&](double t) { return kk_kernel(sol, t, cell, cell, 31); });
  dense = std::max(dense, check_composition(dense_bloch, cell, 0.0, 0.3, 0.7, tol_dense_split).max_defect);

  const auto img = check_composition(image_sum_evolver(theta, 25, false), Grid1D(1024, 1.0), 0.0, 0.3, 0.7,
                                     tol_dense_split, 11, 2);
  info(fmt("image-sum N=25 composition (0, 0.3, 0.7), grid 1024: %.2e", img.max_defect));

  std::mt19937_64 rng(3);
  auto psi = random_ring_packet(ring, 0.3, rng);
  auto chi = random_ring_packet(cell, theta, rng);
  const double n0 = psi.norm(), m0 = chi.norm();
  const auto step = kk_kernel(sol, 0.01, cell, cell, 31);
  for (int s = 0; s < 100; ++s) {
    psi = spectral_propagate_ring(psi, 0.3, 0.01);
    chi = step.apply(chi);
  }
  const double drift = std::max(std::abs(psi.norm() - n0), std::abs(chi.norm() - m0));

  const bool ok = spectral <= tol_spectral_split && dense <= tol_dense_split && drift <= tol_norm_drift;
  char buf[200];
  std::snprintf(buf, sizeof buf, "spectral %.2e (tol %.0e), dense %.2e (tol %.0e), drift %.2e (tol %.0e)", spectral,
                tol_spectral_split, dense, tol_dense_split, drift, tol_norm_drift);
  return {ok, buf};
}

std::vector<Wavepacket> packet_bank(const Grid1D &g, double sigma, const std::vector<double> &momenta = {0.0}) {
  std::vector<Wavepacket> bank;
  for (double p : momenta)
    for (double x0 : {0.45, 0.5, 0.55})
      bank.push_back(gaussian_line(g, x0, sigma, p));
  return bank;
}

double bank_defect(const DenseKernel &a, const DenseKernel &b, const std::vector<Wavepacket> &bank) {
  double d = 0.0;
  for (const auto &p : bank)
    d = std::max(d, l2_distance(a.apply(p), b.apply(p)));
  return d;
}

const Grid1D sector_grid(256, 1.0);

const SectorFamily &family_t02() {
  static const SectorFamily fam = extract_sector_kernels(
      [](double theta) { return spectral_ring_kernel(sector_grid, theta, 0.2); }, sector_grid, 0.2, 64, 31);
  return fam;
}

Outcome uniqueness() {
  const auto &fam = family_t02();
  const auto shifted = extract_sector_kernels(
      [](double theta) { return spectral_ring_kernel(sector_grid, theta, 0.2); }, sector_grid, 0.2, 64, 31, 0.5);
  const auto bank = packet_bank(sector_grid, 0.04);
  double offset = 0.0;
  for (long n = -31; n <= 31; ++n)
    offset = std::max(offset, bank_defect(fam.sector(n), shifted.sector(n), bank));
  double held = 0.0;
  for (double theta : {0.123, 1.0, 2.5, -3.0})
    held = std::max(held, bank_defect(fam.reconstruct(theta), spectral_ring_kernel(sector_grid, theta, 0.2), bank));

  const double t = 0.02;
  const auto small = extract_sector_kernels(
      [&](double theta) { return spectral_ring_kernel(sector_grid, theta, t); }, sector_grid, t, 64, 31);
  std::vector<double> kicks;
  for (int n = -10; n <= 10; ++n)
    kicks.push_back(n / t);
  const auto kicked = packet_bank(sector_grid, 0.07, kicks);
  double weights = 0.0;
  for (double theta : {0.0, 0.7, pi, -2.2}) {
    const auto w = recover_weights(small, spectral_ring_kernel(sector_grid, theta, t), kicked);
    for (long n = -10; n <= 10; ++n)
      weights = std::max(weights, std::abs(w[static_cast<std::size_t>(n + 31)] - cis(-static_cast<double>(n) * theta)));
  }
  const bool ok = offset <= tol_sector_offset && held <= tol_held_out && weights <= tol_weights;
  char buf[200];
  std::snprintf(buf, sizeof buf, "offset %.2e (tol %.0e), held-out %.2e (tol %.0e), weights %.2e (tol %.0e)", offset,
                tol_sector_offset, held, tol_held_out, weights, tol_weights);
  return {ok, buf};
}

Outcome sector_images() {
  const auto bank = packet_bank(sector_grid, 0.04);
  double worst = 0.0;
  for (long n = -5; n <= 5; ++n)
    worst = std::max(worst, bank_defect(family_t02().sector(n), sector_kernel(sector_grid, n, 0.2), bank));
  return {worst <= tol_images, fmt("|n|<=5, t=0.2: max %.2e (tol %.0e)", worst, tol_images)};
}

Outcome single_sector() {
  const Grid1D ring(1024, 1.0);
  const auto psi = normalized(ring_gaussian(ring, 0.5, 0.08, 0.0));
  double worst = 0.0;
  for (double t : {0.2, 1.0}) {
    const double d = std::abs(sector_kernel(ring, 0, t).apply(psi).norm() - 1.0);
    info(fmt("k_0 alone, t=%.1f: norm defect %.3e", t, d));
    worst = std::max(worst, d);
  }
  return {worst > min_single_sector_defect,
          fmt("norm defect %.3e (must exceed %.0e)", worst, min_single_sector_defect)};
}

Outcome crystal_suite() {
  const Grid1D cell(32, 1.0);
  double free_err = 0.0;
  for (double k : {-pi, -1.0, 0.0, 0.4, 3.0}) {
    const auto sol = solve_bloch(PeriodicPotential::free(), k, 15);
    std::vector<double> ref;
    for (long g = -15; g <= 15; ++g)
      ref.push_back(0.5 * std::pow(k + two_pi * static_cast<double>(g), 2));
    std::sort(ref.begin(), ref.end());
    for (Eigen::Index s = 0; s < sol.band_count(); ++s)
      free_err = std::max(free_err, std::abs(sol.energies[s] - ref[static_cast<std::size_t>(s)]));
  }

  const double V1 = 0.05;
  const auto pot = PeriodicPotential::cosine(V1);
  const auto edge = solve_bloch(pot, pi, 15);
  const double gap_dev = std::abs(edge.energies[1] - edge.energies[0] - 2 * V1) / (2 * V1);

  double twist = 0.0;
  const Grid1D next(32, 1.0, 1.0);
  for (double k : {0.0, 1.0, -2.5}) {
    const auto sol = solve_bloch(pot, k, 15);
    twist = std::max(twist, (kk_kernel(sol, 0.3, next, cell, 31).weights -
                             cis(k) * kk_kernel(sol, 0.3, cell, cell, 31).weights)
                                .cwiseAbs()
                                .maxCoeff());
  }

  const BZQuadrature quad{64, 0.0, 1.0};
  const auto base = kr_kernels_bz(pot, {-1, 0, 1, 2}, 0.3, cell, cell, quad, 15);
  const auto moved = kr_kernels_bz(pot, {-1, 0, 1}, 0.3, next, cell, quad, 15);
  double shift = 0.0;
  for (long m : {-1L, 0L, 1L})
    shift = std::max(shift, (moved.at(m).weights - base.at(m + 1).weights).cwiseAbs().maxCoeff());

  KbarCheckOptions opt;
  opt.tolerance = tol_kbar;
  const auto kbar = verify_kbar_equality(pot, {0, 1, 2}, 0.5, opt);
  double kbar_max = 0.0;
  for (const auto &[m, d] : kbar.defects)
    kbar_max = std::max(kbar_max, d);
  KbarCheckOptions free_opt;
  free_opt.tolerance = 1e-7;
  const auto kbar_free = verify_kbar_equality(PeriodicPotential::free(), {1}, 0.3, free_opt);
  info(fmt("free crystal K_R=a vs line, t=0.3: %.2e", kbar_free.defects.at(1)));

  const bool ok = free_err <= tol_free_bands && gap_dev <= gap_fraction && twist <= tol_twisted_bc &&
                  shift <= tol_shift && kbar.pass && kbar_max <= tol_kbar && kbar_free.pass;
  char buf[260];
  std::snprintf(buf, sizeof buf, "bands %.1e, gap dev %.2e, twist %.1e, shift %.1e, K_R vs Kbar (R=0,a,2a) %.2e",
                free_err, gap_dev, twist, shift, kbar_max);
  return {ok, buf};
}

Outcome covering_suite() {
  using homprop::testing::loop_with_winding;
  using homprop::testing::refine;
  std::mt19937_64 rng(99);
  const TorusCoveringModel ring({1.0});
  const TorusCoveringModel torus({1.0, 0.6});
  std::uniform_int_distribution<long> n(-4, 4);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  int bad = 0, cases = 0;
  const int each = covering_cases / 4;

  // free action: nonzero deck transformations move every point, fold is invariant
  for (int i = 0; i < each; ++i, ++cases) {
    const Point x{std::ldexp(std::floor(u(rng) * 256), -8), std::ldexp(std::floor(u(rng) * 256), -8) * 0.6};
    const LatticeVector g{n(rng), n(rng)};
    const auto cp = torus.fold(x);
    const auto moved = deck_transform(g, cp);
    const bool trivial = g[0] == 0 && g[1] == 0;
    if ((moved == cp) != trivial || moved.base != cp.base)
      ++bad;
  }
  // lift uniqueness: lifts from sheets a and b differ by the deck transformation b - a
  for (int i = 0; i < each; ++i, ++cases) {
    const auto p = loop_with_winding(torus, {n(rng), n(rng)}, 0.25, rng);
    const LatticeVector a{n(rng), n(rng)}, b{n(rng), n(rng)};
    const auto la = lift_path(p, a, torus);
    const auto lb = lift_path(p, b, torus);
    for (std::size_t k = 0; k < la.size(); ++k)
      if (deck_transform({b[0] - a[0], b[1] - a[1]}, la[k]) != lb[k] || la[k].base != p.samples[k]) {
        ++bad;
        break;
      }
  }
  // winding additivity
  for (int i = 0; i < each; ++i, ++cases) {
    const LatticeVector w1{n(rng)}, w2{n(rng)};
    auto a = loop_with_winding(ring, w1, 0.3, rng);
    auto b = loop_with_winding(ring, w2, 0.3, rng, &a.samples.front());
    for (auto &t : b.times)
      t += a.times.back();
    if (winding_class(concat_paths(a, b), ring) != LatticeVector{w1[0] + w2[0]})
      ++bad;
  }
  // resampling invariance
  for (int i = 0; i < each; ++i, ++cases) {
    const LatticeVector w{n(rng), n(rng)};
    const auto p = loop_with_winding(torus, w, 0.28, rng);
    if (winding_class(p, torus) != w || winding_class(refine(p, torus, 3), torus) != w)
      ++bad;
  }
  return {bad == 0, std::to_string(cases) + " randomized cases, " + std::to_string(bad) + " failures"};
}

} // namespace

int main() {
  std::printf("acceptance: %d criteria\n", 10);
  run("s3-algebra-exactness", 1.0, s3_exactness);
  run("antimorphism-and-unitarity", 5.0, antimorphism_suite);
  run("yang-baxter", 1.0, yang_baxter);
  run("three-way-ring-agreement", 30.0, three_way);
  run("composition-and-unitarity-axioms", 0.0, composition_axioms);
  run("sector-uniqueness", 0.0, uniqueness);
  run("sectors-are-covering-images", 0.0, sector_images);
  run("single-sector-not-unitary", 0.0, single_sector);
  run("crystal-suite", 60.0, crystal_suite);
  run("covering-space-properties", 5.0, covering_suite);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
