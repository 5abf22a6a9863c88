#include "homprop/homprop.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

using namespace homprop;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { Pass = 0, PhysicsFailure = 1, ConfigFailure = 2, CertificationFailure = 3 };

const char *exit_code_help = "Exit codes:\n"
                             "  0  every check passed\n"
                             "  1  a physics check failed (defect above tolerance, witness in the report)\n"
                             "  2  configuration error (unreadable or malformed JSON, unknown keys, bad values)\n"
                             "  3  numerical certification error (cutoff, aliasing, reflection, non-convergence)\n";

struct RunContext {
  fs::path out;
  std::uint64_t seed = 1;
  int workers = 1;
  double tol_scale = 1.0;
};

// Reads keys from one config object and rejects the ones nobody asked for.
class Section {
public:
  Section(const json &j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object())
      throw ConfigError("section '" + name_ + "' must be a JSON object");
  }

  template <class T> T get(const std::string &key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key))
      return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception &e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  const json *raw(const std::string &key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
  }

private:
  const json &j_;
  std::string name_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string &what) {
  if (!ok)
    throw ConfigError(what);
}

Grid1D ring_grid(long n, double L) {
  require(n >= 8 && is_power_of_two(static_cast<std::size_t>(n)), "grid must be a power of two >= 8");
  require(L > 0, "L must be positive");
  return Grid1D(static_cast<std::size_t>(n), L);
}

PeriodicPotential potential_from(Section &s) {
  PeriodicPotential pot;
  pot.period = s.get<double>("a", 1.0);
  if (const json *v = s.raw("V_coeffs")) {
    require(v->is_object(), "V_coeffs must map harmonics to values");
    for (auto it = v->begin(); it != v->end(); ++it) {
      long g;
      try {
        std::size_t used = 0;
        g = std::stol(it.key(), &used);
        require(used == it.key().size(), "bad harmonic '" + it.key() + "'");
      } catch (const std::logic_error &) {
        throw ConfigError("bad harmonic '" + it.key() + "'");
      }
      const auto &z = it.value();
      if (z.is_number())
        pot.coeffs[g] = z.get<double>();
      else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number())
        pot.coeffs[g] = {z[0].get<double>(), z[1].get<double>()};
      else
        throw ConfigError("V_coeffs values must be numbers or [re, im]");
    }
  }
  pot.validate();
  return pot;
}

json check_json(const std::string &name, bool pass, double defect, double tolerance) {
  return {{"check", name}, {"pass", pass}, {"defect", defect}, {"tolerance", tolerance}};
}

void write_report(const fs::path &dir, const json &report) {
  std::ofstream os(dir / "report.json");
  if (!os)
    throw InvalidArgument("cannot write " + (dir / "report.json").string());
  os << report.dump(2) << '\n';
}

fs::path prepare(const RunContext &ctx, const std::string &name) {
  const fs::path dir = ctx.out / name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw InvalidArgument("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

// ---------------------------------------------------------------------------
// group-check

struct GroupCheckConfig {
  int samples = 1000;
  std::size_t max_length = 10;
  std::vector<std::string> builtin{"s3", "f2_to_s3", "bloch", "braid"};
  std::vector<double> bloch_theta{0.3, 0.7};
  int braid_strands = 4;
  std::vector<double> braid_phases{0.9, 0.9, 0.9};
  std::vector<std::pair<std::string, UnitaryRep>> custom;
};

GroupCheckConfig parse_group_check(const json &j) {
  Section s(j, "group_check");
  GroupCheckConfig c;
  c.samples = s.get("samples", c.samples);
  c.max_length = s.get("max_length", c.max_length);
  c.builtin = s.get("builtin", c.builtin);
  c.bloch_theta = s.get("bloch_theta", c.bloch_theta);
  c.braid_strands = s.get("braid_strands", c.braid_strands);
  c.braid_phases = s.get("braid_phases", c.braid_phases);
  if (const json *reps = s.raw("representations")) {
    require(reps->is_array(), "representations must be an array");
    for (const auto &r : *reps) {
      Section rs(r, "group_check.representations[]");
      const auto name = rs.get<std::string>("name", "custom");
      const json *rep = rs.raw("rep");
      require(rep != nullptr, "representation '" + name + "' has no rep");
      rs.finish();
      c.custom.emplace_back(name, rep_from_json(*rep));
    }
  }
  s.finish();
  require(c.samples >= 1, "samples must be positive");
  require(!c.bloch_theta.empty(), "bloch_theta must not be empty");
  for (const auto &b : c.builtin)
    require(b == "s3" || b == "f2_to_s3" || b == "bloch" || b == "braid", "unknown builtin rep '" + b + "'");
  return c;
}

json s3_exactness() {
  const auto rep = s3_standard_rep();
  const auto p = rep.presentation();
  json rows = json::array();
  bool pass = true;
  const std::pair<std::vector<int>, S3Element> table[] = {
      {{1}, S3Element::E1},         {{2}, S3Element::E2},        {{1, 2}, S3Element::EMinus},
      {{2, 1}, S3Element::EPlus},   {{1, 2, 1}, S3Element::E3},  {{1, 1}, S3Element::Identity},
      {{1, 2, 1, 2, 1, 2}, S3Element::Identity}};
  for (const auto &[labels, expected] : table) {
    GroupWord w{p, {}};
    for (int l : labels)
      w.letters.push_back({l - 1, 1});
    const bool ok = rep.eval(w) == s3_image(expected) && s3_element(w) == expected;
    pass = pass && ok;
    rows.push_back({{"word", to_string(w)}, {"exact", ok}});
  }
  return {{"check", "s3_integer_exactness"}, {"pass", pass}, {"words", rows}};
}

int run_group_check(const GroupCheckConfig &c, const RunContext &ctx) {
  const auto dir = prepare(ctx, "group-check");
  std::vector<std::pair<std::string, UnitaryRep>> reps;
  for (const auto &b : c.builtin) {
    if (b == "s3")
      reps.emplace_back(b, s3_standard_rep());
    else if (b == "f2_to_s3")
      reps.emplace_back(b, f2_to_s3_rep());
    else if (b == "bloch")
      reps.emplace_back(b, bloch_scalar_rep(c.bloch_theta));
    else
      reps.emplace_back(b, braid_scalar_rep(c.braid_strands, c.braid_phases));
  }
  for (const auto &r : c.custom)
    reps.push_back(r);

  json report{{"subcommand", "group-check"}, {"seed", ctx.seed}, {"samples", c.samples}};
  json results = json::array();
  bool pass = true;
  if (std::find(c.builtin.begin(), c.builtin.end(), "s3") != c.builtin.end()) {
    auto ex = s3_exactness();
    pass = pass && ex["pass"].get<bool>();
    results.push_back(ex);
  }
  for (const auto &[name, rep] : reps) {
    std::vector<CheckReport> checks{check_rep_homomorphism(rep, c.samples, ctx.seed, c.max_length),
                                    check_rep_unitary(rep, ctx.seed + 1, 100, c.max_length)};
    const auto &pr = rep.presentation();
    if (pr.kind == GroupPresentation::Kind::Braid && pr.param >= 3)
      checks.push_back(check_yang_baxter(rep));
    for (const auto &r : checks) {
      auto jr = r.to_json();
      jr["representation"] = name;
      jr["presentation"] = pr.name();
      results.push_back(jr);
      pass = pass && r.pass;
    }
  }
  report["results"] = results;
  report["pass"] = pass;
  write_report(dir, report);
  return pass ? Pass : PhysicsFailure;
}

// ---------------------------------------------------------------------------
// ring-evolve

struct RingEvolveConfig {
  long grid = 256;
  double L = 1.0;
  double x0 = 0.5;
  double sigma = 0.05;
  double p0 = 0.0;
  double theta = 0.3;
  std::vector<double> times{0.05, 0.1, 0.2};
  long winding_cutoff = 20;
  bool certify = true;
  double tolerance = 1e-7;
  int sweep_steps = 32;
  double sweep_time = 0.1;
  int composition_packets = 10;
  double composition_tolerance = 1e-12;
};

RingEvolveConfig parse_ring_evolve(const json &j) {
  Section s(j, "ring_evolve");
  RingEvolveConfig c;
  c.grid = s.get("grid", c.grid);
  c.L = s.get("L", c.L);
  c.x0 = s.get("x0", c.x0);
  c.sigma = s.get("sigma", c.sigma);
  c.p0 = s.get("p0", c.p0);
  c.theta = s.get("theta", c.theta);
  c.times = s.get("times", c.times);
  c.winding_cutoff = s.get("winding_cutoff", c.winding_cutoff);
  c.certify = s.get("certify", c.certify);
  c.tolerance = s.get("tolerance", c.tolerance);
  c.sweep_steps = s.get("sweep_steps", c.sweep_steps);
  c.sweep_time = s.get("sweep_time", c.sweep_time);
  c.composition_packets = s.get("composition_packets", c.composition_packets);
  c.composition_tolerance = s.get("composition_tolerance", c.composition_tolerance);
  s.finish();
  ring_grid(c.grid, c.L);
  require(c.sigma > 0, "sigma must be positive");
  require(!c.times.empty(), "times must not be empty");
  for (double t : c.times)
    require(t > 0, "times must be positive");
  require(c.sweep_steps >= 1 && c.sweep_time > 0, "sweep needs at least one step and a positive time");
  require(c.winding_cutoff >= -1, "winding_cutoff must be -1 (automatic) or non-negative");
  return c;
}

struct ThreeWay {
  Wavepacket spectral, images, split;
  long cutoff = 0;
  std::vector<double> term_norms;
  double d_si = 0, d_ss = 0, d_is = 0;
  double max() const { return std::max({d_si, d_ss, d_is}); }
};

ThreeWay three_way(const RingEvolveConfig &c, const Grid1D &g, double theta, double t) {
  const auto psi = ring_gaussian(g, c.x0, c.sigma, theta, c.p0);
  ImageSumOptions opt;
  opt.winding_cutoff = c.winding_cutoff;
  opt.certify = c.certify;
  auto img = image_sum_evolve_ring(psi, theta, t, opt);
  ThreeWay r{spectral_propagate_ring(psi, theta, t), std::move(img.psi),
             split_step_ring_gaussian(g, c.x0, c.sigma, c.p0, theta, t), img.cutoff, std::move(img.term_norms)};
  r.d_si = l2_distance(r.spectral, r.images);
  r.d_ss = l2_distance(r.spectral, r.split);
  r.d_is = l2_distance(r.images, r.split);
  return r;
}

int run_ring_evolve(const RingEvolveConfig &c, const RunContext &ctx) {
  const auto dir = prepare(ctx, "ring-evolve");
  const auto g = ring_grid(c.grid, c.L);
  const double tol = c.tolerance * ctx.tol_scale;
  bool pass = true;

  std::ofstream traj(dir / "trajectory.csv");
  traj << "t,evolver,x,re,im\n";
  json rows = json::array();
  ThreeWay last;
  for (double t : c.times) {
    last = three_way(c, g, c.theta, t);
    for (const auto &[name, w] : {std::pair<const char *, const Wavepacket *>{"spectral", &last.spectral},
                                  {"image_sum", &last.images},
                                  {"split_step", &last.split}})
      for (std::size_t i = 0; i < g.n_points; ++i) {
        const auto z = w->amp[static_cast<Eigen::Index>(i)];
        traj << format_double(t) << ',' << name << ',' << format_double(g.x(i)) << ',' << format_double(z.real())
             << ',' << format_double(z.imag()) << '\n';
      }
    const bool ok = last.max() <= tol;
    pass = pass && ok;
    rows.push_back({{"t", t},
                    {"winding_cutoff", last.cutoff},
                    {"spectral_vs_image_sum", last.d_si},
                    {"spectral_vs_split_step", last.d_ss},
                    {"image_sum_vs_split_step", last.d_is},
                    {"pass", ok}});
  }

  std::ofstream conv(dir / "convergence.csv");
  conv << "N,term_norm\n";
  for (std::size_t k = 0; k < last.term_norms.size(); ++k)
    conv << static_cast<long>(k) - last.cutoff << ',' << format_double(last.term_norms[k]) << '\n';

  std::ofstream sweep(dir / "theta_sweep.csv");
  sweep << "theta,spectral_vs_image_sum,spectral_vs_split_step,image_sum_vs_split_step\n";
  double sweep_max = 0.0;
  bool finite = true;
  for (int m = 0; m < c.sweep_steps; ++m) {
    const double theta = two_pi * m / c.sweep_steps;
    const auto r = three_way(c, g, theta, c.sweep_time);
    for (double d : {r.d_si, r.d_ss, r.d_is})
      finite = finite && std::isfinite(d);
    sweep_max = std::max(sweep_max, r.max());
    sweep << format_double(theta) << ',' << format_double(r.d_si) << ',' << format_double(r.d_ss) << ','
          << format_double(r.d_is) << '\n';
  }
  pass = pass && finite;

  json composition;
  if (c.composition_packets > 0) {
    const auto r = check_composition(spectral_evolver(c.theta), g, 0.0, 0.3, 0.7,
                                     c.composition_tolerance * ctx.tol_scale, ctx.seed, c.composition_packets);
    composition = r.to_json();
    pass = pass && r.pass;
  }

  json report{{"subcommand", "ring-evolve"},
              {"seed", ctx.seed},
              {"theta", c.theta},
              {"tolerance", tol},
              {"defects", rows},
              {"theta_sweep", {{"steps", c.sweep_steps}, {"t", c.sweep_time}, {"max_defect", sweep_max},
                               {"finite", finite}}},
              {"composition", composition},
              {"pass", pass}};
  write_report(dir, report);
  return pass ? Pass : PhysicsFailure;
}

// ---------------------------------------------------------------------------
// sector-extract

struct SectorConfig {
  long grid = 256;
  double L = 1.0;
  double t = 0.2;
  int M = 64;
  long N = 31;
  double offset = 0.5;
  std::vector<double> held_out{0.123, 1.0, 2.5, -3.0};
  long compare_images = 5;
  long write_sectors = 2;
  double sigma = 0.04;
  double tolerance = 1e-8;
};

SectorConfig parse_sector(const json &j) {
  Section s(j, "sector_extract");
  SectorConfig c;
  c.grid = s.get("grid", c.grid);
  c.L = s.get("L", c.L);
  c.t = s.get("t", c.t);
  c.M = s.get("M", c.M);
  c.N = s.get("N", c.N);
  c.offset = s.get("offset", c.offset);
  c.held_out = s.get("held_out", c.held_out);
  c.compare_images = s.get("compare_images", c.compare_images);
  c.write_sectors = s.get("write_sectors", c.write_sectors);
  c.sigma = s.get("sigma", c.sigma);
  c.tolerance = s.get("tolerance", c.tolerance);
  s.finish();
  ring_grid(c.grid, c.L);
  require(c.t != 0.0, "t must be nonzero");
  require(c.N >= 0 && c.compare_images <= c.N && c.write_sectors <= c.N,
          "compare_images and write_sectors must not exceed N");
  require(c.sigma > 0, "sigma must be positive");
  return c;
}

int run_sector_extract(const SectorConfig &c, const RunContext &ctx) {
  const auto dir = prepare(ctx, "sector-extract");
  const auto g = ring_grid(c.grid, c.L);
  const double tol = c.tolerance * ctx.tol_scale;
  const double t = c.t;
  const ThetaKernelBuilder build = [&](double theta) { return spectral_ring_kernel(g, theta, t); };
  const auto fam = extract_sector_kernels(build, g, t, c.M, c.N, 0.0, ctx.workers);
  const auto shifted = extract_sector_kernels(build, g, t, c.M, c.N, c.offset, ctx.workers);

  std::vector<Wavepacket> bank;
  for (double x0 : {0.45, 0.5, 0.55})
    bank.push_back(gaussian_line(g, x0 * c.L, c.sigma * c.L));
  auto defect = [&](const DenseKernel &a, const DenseKernel &b) {
    double d = 0.0;
    for (const auto &p : bank)
      d = std::max(d, l2_distance(a.apply(p), b.apply(p)));
    return d;
  };

  double offset_defect = 0.0;
  for (long n = -c.N; n <= c.N; ++n)
    offset_defect = std::max(offset_defect, defect(fam.sector(n), shifted.sector(n)));
  double held_out = 0.0;
  for (double theta : c.held_out)
    held_out = std::max(held_out, defect(fam.reconstruct(theta), spectral_ring_kernel(g, theta, t)));
  double images = 0.0;
  for (long n = -c.compare_images; n <= c.compare_images; ++n)
    images = std::max(images, defect(fam.sector(n), sector_kernel(g, n, t)));

  json files = json::array();
  for (long n = -c.write_sectors; n <= c.write_sectors; ++n) {
    const auto name = "k_" + std::to_string(n) + ".bin";
    write_kernel_binary((dir / name).string(), fam.sector(n));
    files.push_back(name);
  }

  json checks = json::array({check_json("offset_independence", offset_defect <= tol, offset_defect, tol),
                             check_json("held_out_reconstruction", held_out <= tol, held_out, tol),
                             check_json("sectors_match_line_images", images <= tol, images, tol)});
  bool pass = true;
  for (const auto &ch : checks)
    pass = pass && ch["pass"].get<bool>();
  json report{{"subcommand", "sector-extract"}, {"t", t},          {"M", c.M}, {"N", c.N}, {"offset", c.offset},
              {"checks", checks},              {"kernels", files}, {"pass", pass}};
  write_report(dir, report);
  return pass ? Pass : PhysicsFailure;
}

// ---------------------------------------------------------------------------
// bands

struct BandsConfig {
  PeriodicPotential pot;
  long G_max = 15;
  int k_points = 65;
  long n_bands = 6;
  double tolerance = 1e-10;
  double gap_fraction = 0.05;
};

BandsConfig parse_bands(const json &j) {
  Section s(j, "bands");
  BandsConfig c;
  c.pot = potential_from(s);
  c.G_max = s.get("G_max", c.G_max);
  c.k_points = s.get("k_points", c.k_points);
  c.n_bands = s.get("n_bands", c.n_bands);
  c.tolerance = s.get("tolerance", c.tolerance);
  c.gap_fraction = s.get("gap_fraction", c.gap_fraction);
  s.finish();
  require(c.k_points >= 2, "k_points must be at least 2");
  require(c.n_bands >= 1 && c.n_bands <= 2 * c.G_max + 1, "n_bands must lie in [1, 2 G_max + 1]");
  return c;
}

int run_bands(const BandsConfig &c, const RunContext &ctx) {
  const auto dir = prepare(ctx, "bands");
  const double a = c.pot.period;
  const double tol = c.tolerance * ctx.tol_scale;
  std::vector<double> ks;
  std::vector<RVector> es;
  double periodicity = 0.0, free_defect = 0.0;
  for (int q = 0; q < c.k_points; ++q) {
    const double k = -pi / a + two_pi / a * q / (c.k_points - 1);
    const auto sol = solve_bloch(c.pot, k, c.G_max);
    const auto shifted = solve_bloch(c.pot, k + two_pi / a, c.G_max);
    ks.push_back(k);
    es.push_back(sol.energies);
    for (Eigen::Index s = 0; s < c.n_bands; ++s)
      periodicity = std::max(periodicity, std::abs(sol.energies[s] - shifted.energies[s]));
    if (c.pot.is_free()) {
      std::vector<double> ref;
      for (long g = -c.G_max; g <= c.G_max; ++g)
        ref.push_back(0.5 * std::pow(k + two_pi * static_cast<double>(g) / a, 2));
      std::sort(ref.begin(), ref.end());
      for (Eigen::Index s = 0; s < c.n_bands; ++s)
        free_defect = std::max(free_defect, std::abs(sol.energies[s] - ref[static_cast<std::size_t>(s)]));
    }
  }
  std::ofstream csv(dir / "bands.csv");
  write_bands_csv(csv, ks, es, c.n_bands);

  json checks = json::array({check_json("band_periodicity", periodicity <= tol, periodicity, tol)});
  if (c.pot.is_free())
    checks.push_back(check_json("free_parabolas", free_defect <= tol, free_defect, tol));
  json gap = nullptr;
  if (c.pot.support() == 1) {
    const double V1 = std::abs(c.pot.coefficient(1));
    const auto edge = solve_bloch(c.pot, pi / a, c.G_max);
    const double g = edge.energies[1] - edge.energies[0];
    const double rel = std::abs(g - 2 * V1) / (2 * V1);
    gap = {{"k", pi / a}, {"gap", g}, {"two_V1", 2 * V1}, {"relative_deviation", rel}};
    checks.push_back(check_json("first_gap_vs_2V1", rel <= c.gap_fraction, rel, c.gap_fraction));
  }
  bool pass = true;
  for (const auto &ch : checks)
    pass = pass && ch["pass"].get<bool>();
  json report{{"subcommand", "bands"}, {"G_max", c.G_max}, {"k_points", c.k_points},
              {"checks", checks},      {"gap", gap},       {"pass", pass}};
  write_report(dir, report);
  return pass ? Pass : PhysicsFailure;
}

// ---------------------------------------------------------------------------
// crystal-propagator

struct CrystalConfig {
  PeriodicPotential pot;
  double t = 0.5;
  std::vector<long> cells{0, 1, 2};
  KbarCheckOptions opt;
  bool write_kernels = true;
};

CrystalConfig parse_crystal(const json &j) {
  Section s(j, "crystal_propagator");
  CrystalConfig c;
  c.pot = potential_from(s);
  c.t = s.get("t", c.t);
  c.cells = s.get("cells", c.cells);
  c.opt.cell_points = s.get("grid", c.opt.cell_points);
  c.opt.line_cells = s.get("line_cells", c.opt.line_cells);
  c.opt.bz_nodes = s.get("M", c.opt.bz_nodes);
  c.opt.G_max = s.get("G_max", c.opt.G_max);
  c.opt.n_steps = s.get("n_steps", c.opt.n_steps);
  c.opt.sigma = s.get("sigma", c.opt.sigma);
  c.opt.x0 = s.get("x0", c.opt.x0);
  c.opt.tolerance = s.get("tolerance", c.opt.tolerance);
  c.write_kernels = s.get("write_kernels", c.write_kernels);
  s.finish();
  require(!c.cells.empty(), "cells must not be empty");
  require(c.opt.line_cells >= 4 && is_power_of_two(c.opt.line_cells), "line_cells must be a power of two >= 4");
  ring_grid(static_cast<long>(c.opt.cell_points), c.pot.period);
  return c;
}

int run_crystal(const CrystalConfig &c, const RunContext &ctx) {
  const auto dir = prepare(ctx, "crystal-propagator");
  auto opt = c.opt;
  opt.tolerance *= ctx.tol_scale;
  opt.workers = ctx.workers;
  const auto r = verify_kbar_equality(c.pot, c.cells, c.t, opt);

  const Grid1D cell(opt.cell_points, c.pot.period);
  const Grid1D next(opt.cell_points, c.pot.period, c.pot.period);
  const auto sol = solve_bloch(c.pot, 0.7 / c.pot.period, opt.G_max);
  const auto nb = 2 * opt.G_max + 1;
  const auto kk = kk_kernel(sol, c.t, cell, cell, nb);
  const double twist =
      (kk_kernel(sol, c.t, next, cell, nb).weights - cis(0.7) * kk.weights).cwiseAbs().maxCoeff();
  const double tw_tol = 1e-10 * ctx.tol_scale;

  json files = json::array();
  if (c.write_kernels) {
    const auto kr = kr_kernels_bz(c.pot, c.cells, c.t, cell, cell, {opt.bz_nodes, 0.0, c.pot.period}, opt.G_max,
                                  -1, ctx.workers);
    for (const auto &[m, K] : kr) {
      const auto name = "K_R" + std::to_string(m) + ".bin";
      write_kernel_binary((dir / name).string(), K);
      files.push_back(name);
    }
    write_kernel_binary((dir / "K_k.bin").string(), kk);
    files.push_back("K_k.bin");
  }
  const bool pass = r.pass && twist <= tw_tol;
  json report{{"subcommand", "crystal-propagator"},
              {"t", c.t},
              {"kbar_equality", r.to_json()},
              {"kbar_tolerance", opt.tolerance},
              {"twisted_boundary", check_json("kk_twisted_boundary", twist <= tw_tol, twist, tw_tol)},
              {"kernels", files},
              {"pass", pass}};
  write_report(dir, report);
  return pass ? Pass : PhysicsFailure;
}

// ---------------------------------------------------------------------------
// winding

struct WindingConfig {
  std::string path;
  std::vector<double> cell_lengths{1.0};
  double continuity_bound = 0.45;
};

WindingConfig parse_winding(const json &j) {
  Section s(j, "winding");
  WindingConfig c;
  c.path = s.get("path", c.path);
  c.cell_lengths = s.get("cell_lengths", c.cell_lengths);
  c.continuity_bound = s.get("continuity_bound", c.continuity_bound);
  s.finish();
  require(!c.path.empty(), "winding.path is required");
  return c;
}

int run_winding(const WindingConfig &c, const RunContext &ctx) {
  const auto dir = prepare(ctx, "winding");
  const TorusCoveringModel model(c.cell_lengths);
  const auto loop = read_path_csv(c.path, model, c.continuity_bound);
  auto report = winding_report(loop, model);
  report["subcommand"] = "winding";
  write_report(dir, report);
  return Pass;
}

// ---------------------------------------------------------------------------

json load_config(const std::string &path) {
  if (path.empty())
    return json::object();
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  require(j.is_object(), "config must be a JSON object");
  static const std::set<std::string> sections{"group_check", "ring_evolve", "sector_extract", "bands",
                                              "crystal_propagator", "winding"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!sections.count(it.key()))
      throw ConfigError("unknown config section '" + it.key() + "'");
  return j;
}

const json &section(const json &cfg, const char *name) {
  static const json empty = json::object();
  return cfg.contains(name) ? cfg.at(name) : empty;
}

int code_for(const Error &e) { return e.kind() == ErrorKind::Certification ? CertificationFailure : ConfigFailure; }

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Homotopy-sector propagators on rings and 1-D crystals"};
  app.footer(exit_code_help);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "out", profile = "default";
  std::uint64_t seed = 1;
  int workers = 1;
  app.add_option("--config", config_path, "JSON config; sections per subcommand, defaults otherwise");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();
  app.add_option("--workers", workers, "worker threads for theta and k loops")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--tolerance-profile", profile, "strict divides tolerances by 10")
      ->capture_default_str()
      ->check(CLI::IsMember({"strict", "default"}));

  const std::vector<std::pair<std::string, std::string>> commands{
      {"group-check", "representation homomorphism, unitarity and Yang-Baxter checks"},
      {"ring-evolve", "spectral, image-sum and split-step evolution on the twisted ring"},
      {"sector-extract", "homotopy-sector kernels from twisted propagators"},
      {"bands", "Bloch bands of a periodic potential"},
      {"crystal-propagator", "K_k, K_R and the covering-line propagator identity"},
      {"winding", "winding class of a sampled loop (config section 'winding')"},
      {"all", "every subcommand above except winding"}};
  for (const auto &[name, help] : commands)
    app.add_subcommand(name, help)->footer(exit_code_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? Pass : ConfigFailure;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  RunContext ctx{out_dir, seed, workers, profile == "strict" ? 0.1 : 1.0};

  int worst = Pass;
  auto merge = [&](int rc) {
    if (rc == CertificationFailure || worst == CertificationFailure)
      worst = CertificationFailure;
    else
      worst = std::max(worst, rc);
  };

  try {
    const auto cfg = load_config(config_path);
    const bool all = cmd == "all";
    // parse every needed section before running anything
    std::optional<GroupCheckConfig> gc;
    std::optional<RingEvolveConfig> re;
    std::optional<SectorConfig> se;
    std::optional<BandsConfig> bc;
    std::optional<CrystalConfig> cc;
    std::optional<WindingConfig> wc;
    if (all || cmd == "group-check")
      gc = parse_group_check(section(cfg, "group_check"));
    if (all || cmd == "ring-evolve")
      re = parse_ring_evolve(section(cfg, "ring_evolve"));
    if (all || cmd == "sector-extract")
      se = parse_sector(section(cfg, "sector_extract"));
    if (all || cmd == "bands")
      bc = parse_bands(section(cfg, "bands"));
    if (all || cmd == "crystal-propagator")
      cc = parse_crystal(section(cfg, "crystal_propagator"));
    if (cmd == "winding")
      wc = parse_winding(section(cfg, "winding"));

    std::vector<std::pair<std::string, std::function<int()>>> jobs;
    if (gc)
      jobs.emplace_back("group-check", [&] { return run_group_check(*gc, ctx); });
    if (re)
      jobs.emplace_back("ring-evolve", [&] { return run_ring_evolve(*re, ctx); });
    if (se)
      jobs.emplace_back("sector-extract", [&] { return run_sector_extract(*se, ctx); });
    if (bc)
      jobs.emplace_back("bands", [&] { return run_bands(*bc, ctx); });
    if (cc)
      jobs.emplace_back("crystal-propagator", [&] { return run_crystal(*cc, ctx); });
    if (wc)
      jobs.emplace_back("winding", [&] { return run_winding(*wc, ctx); });

    for (const auto &[name, job] : jobs) {
      int rc;
      try {
        rc = job();
      } catch (const Error &e) {
        rc = code_for(e);
        std::cerr << name << ": " << e.what() << '\n';
        std::error_code ec;
        fs::create_directories(ctx.out / name, ec);
        write_report(ctx.out / name, {{"subcommand", name}, {"pass", false}, {"error", e.what()},
                                      {"exit_code", rc}});
      }
      std::cout << name << ": " << (rc == Pass ? "pass" : "FAIL") << " (exit " << rc << ")\n";
      merge(rc);
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return code_for(e);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return ConfigFailure;
  }
  return worst;
}
