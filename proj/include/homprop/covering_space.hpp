#pragma once

// d-torus as the quotient of R^d by an integer lattice of cell translations.
// A point of the cover is a base point in the primary cell [0, L_1) x ... x
// [0, L_d) plus the lattice coordinates of its sheet.

#include "homprop/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace homprop {

using Point = std::vector<double>;
using LatticeVector = std::vector<long>;

struct CoveringPoint {
  Point base;
  LatticeVector sheet;
  friend bool operator==(const CoveringPoint &, const CoveringPoint &) = default;
};

class TorusCoveringModel {
public:
  explicit TorusCoveringModel(std::vector<double> cell_lengths) : lengths_(std::move(cell_lengths)) {
    if (lengths_.empty())
      throw InvalidArgument("torus dimension must be positive");
    for (double l : lengths_)
      if (!(l > 0.0) || !std::isfinite(l))
        throw InvalidArgument("cell lengths must be positive and finite");
  }

  std::size_t dimension() const { return lengths_.size(); }
  const std::vector<double> &cell_lengths() const { return lengths_; }
  double min_length() const { return *std::min_element(lengths_.begin(), lengths_.end()); }

  /// Projection R^d -> cell with sheet = floor(x / L).
  CoveringPoint fold(const Point &x) const {
    check_dim(x.size());
    CoveringPoint cp{Point(x.size()), LatticeVector(x.size())};
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!std::isfinite(x[j]))
        throw InvalidArgument("fold needs finite coordinates");
      const double L = lengths_[j];
      double s = std::floor(x[j] / L);
      double b = x[j] - s * L;
      // rounding can put b on the wrong side of the cell boundary
      if (b >= L) {
        b -= L;
        s += 1;
      } else if (b < 0) {
        b += L;
        s -= 1;
      }
      if (b >= L)
        b = std::nextafter(L, 0.0);
      cp.base[j] = b;
      cp.sheet[j] = static_cast<long>(s);
    }
    return cp;
  }

  /// Position in R^d of a covering point.
  Point unfold(const CoveringPoint &cp) const {
    check_dim(cp.base.size());
    Point x(cp.base.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = cp.base[j] + static_cast<double>(cp.sheet[j]) * lengths_[j];
    return x;
  }

  void check_dim(std::size_t d) const {
    if (d != lengths_.size())
      throw DimensionMismatch("point dimension " + std::to_string(d) + " does not match torus dimension " +
                              std::to_string(lengths_.size()));
  }

private:
  std::vector<double> lengths_;
};

inline CoveringPoint fold(const Point &x, const TorusCoveringModel &model) { return model.fold(x); }

/// T_g: shifts the sheet by g, base unchanged.
inline CoveringPoint deck_transform(const LatticeVector &g, const CoveringPoint &cp) {
  if (g.size() != cp.sheet.size())
    throw DimensionMismatch("deck vector dimension mismatch");
  CoveringPoint r = cp;
  for (std::size_t j = 0; j < g.size(); ++j)
    r.sheet[j] += g[j];
  return r;
}

/// Sampled path on the torus. Times must be strictly monotone (a path run
/// backwards in time is allowed, which is how inverse paths are represented).
struct DiscretePath {
  std::vector<Point> samples;
  std::vector<double> times;
  double continuity_bound = 0.0;
};

inline void validate_path(const DiscretePath &p, const TorusCoveringModel &model) {
  if (p.samples.empty())
    throw InvalidArgument("path has no samples");
  if (p.samples.size() != p.times.size())
    throw InvalidArgument("path samples and times differ in length");
  if (!(p.continuity_bound > 0.0) || !(p.continuity_bound < model.min_length() / 2))
    throw InvalidArgument("continuity bound must lie in (0, min L / 2)");
  for (const auto &s : p.samples) {
    model.check_dim(s.size());
    for (std::size_t j = 0; j < s.size(); ++j)
      if (!(s[j] >= 0.0 && s[j] < model.cell_lengths()[j]))
        throw InvalidArgument("path sample outside the primary cell");
  }
  if (p.times.size() > 1) {
    const bool up = p.times[1] > p.times[0];
    for (std::size_t i = 1; i < p.times.size(); ++i)
      if (up ? !(p.times[i] > p.times[i - 1]) : !(p.times[i] < p.times[i - 1]))
        throw InvalidArgument("path times are not strictly monotone");
  }
}

namespace detail {
// Minimal-image step from a to b along axis of length L; returns the sheet
// increment and writes the unwrapped displacement.
inline long minimal_image(double a, double b, double L, double &displacement) {
  const double raw = b - a;
  const long k = -std::lround(raw / L);
  displacement = raw + static_cast<double>(k) * L;
  return k;
}
} // namespace detail

/// Unwrapped per-step displacements (minimal image) of a path.
inline std::vector<Point> path_displacements(const DiscretePath &p, const TorusCoveringModel &model) {
  std::vector<Point> out;
  for (std::size_t i = 1; i < p.samples.size(); ++i) {
    Point d(model.dimension());
    for (std::size_t j = 0; j < d.size(); ++j)
      detail::minimal_image(p.samples[i - 1][j], p.samples[i][j], model.cell_lengths()[j], d[j]);
    out.push_back(std::move(d));
  }
  return out;
}

/// Unique continuous lift starting on start_sheet. Base points are copied
/// unchanged; only sheets are tracked, with integer arithmetic.
inline std::vector<CoveringPoint> lift_path(const DiscretePath &p, const LatticeVector &start_sheet,
                                            const TorusCoveringModel &model) {
  validate_path(p, model);
  if (start_sheet.size() != model.dimension())
    throw DimensionMismatch("start sheet dimension mismatch");
  std::vector<CoveringPoint> lift;
  lift.reserve(p.samples.size());
  lift.push_back({p.samples.front(), start_sheet});
  for (std::size_t i = 1; i < p.samples.size(); ++i) {
    CoveringPoint next{p.samples[i], lift.back().sheet};
    for (std::size_t j = 0; j < model.dimension(); ++j) {
      double d = 0.0;
      next.sheet[j] += detail::minimal_image(p.samples[i - 1][j], p.samples[i][j], model.cell_lengths()[j], d);
      if (std::abs(d) > p.continuity_bound) {
        std::ostringstream os;
        os << "step " << i << " moves " << std::abs(d) << " along axis " << j
           << ", above the continuity bound " << p.continuity_bound;
        throw AmbiguousLift(os.str());
      }
    }
    lift.push_back(std::move(next));
  }
  return lift;
}

/// Homotopy class in Z^d of a loop: final sheet minus start sheet of its lift.
inline LatticeVector winding_class(const DiscretePath &loop, const TorusCoveringModel &model) {
  validate_path(loop, model);
  if (loop.samples.front() != loop.samples.back())
    throw NotALoop("path endpoints differ");
  const LatticeVector zero(model.dimension(), 0);
  const auto lift = lift_path(loop, zero, model);
  return lift.back().sheet;
}

/// Path followed by another starting where the first ends; the shared
/// junction sample appears once.
inline DiscretePath concat_paths(const DiscretePath &a, const DiscretePath &b) {
  if (a.samples.empty() || b.samples.empty())
    throw InvalidArgument("cannot concatenate empty paths");
  if (a.samples.back() != b.samples.front() || a.times.back() != b.times.front())
    throw InvalidArgument("paths do not meet at the junction");
  DiscretePath r = a;
  r.samples.insert(r.samples.end(), b.samples.begin() + 1, b.samples.end());
  r.times.insert(r.times.end(), b.times.begin() + 1, b.times.end());
  r.continuity_bound = std::max(a.continuity_bound, b.continuity_bound);
  return r;
}

/// Same samples traversed backwards: C^-1.
inline DiscretePath reverse_path(const DiscretePath &p) {
  DiscretePath r = p;
  std::reverse(r.samples.begin(), r.samples.end());
  std::reverse(r.times.begin(), r.times.end());
  return r;
}

// ---------------------------------------------------------------------------
// CSV rows (t, x_1..x_d); coordinates may lie anywhere in R^d and are folded.

inline DiscretePath read_path_csv(std::istream &in, const TorusCoveringModel &model, double continuity_bound) {
  DiscretePath p;
  p.continuity_bound = continuity_bound;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception &) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (p.times.empty() && row == 1)
        continue; // header
      throw InvalidArgument("non-numeric value on path CSV row " + std::to_string(row));
    }
    if (values.size() != model.dimension() + 1)
      throw InvalidArgument("path CSV row " + std::to_string(row) + " has " + std::to_string(values.size()) +
                            " columns, expected " + std::to_string(model.dimension() + 1));
    p.times.push_back(values[0]);
    p.samples.push_back(model.fold(Point(values.begin() + 1, values.end())).base);
  }
  return p;
}

inline DiscretePath read_path_csv(const std::string &path, const TorusCoveringModel &model, double continuity_bound) {
  std::ifstream in(path);
  if (!in)
    throw InvalidArgument("cannot open path file " + path);
  return read_path_csv(in, model, continuity_bound);
}

inline nlohmann::json winding_report(const DiscretePath &loop, const TorusCoveringModel &model) {
  const auto w = winding_class(loop, model);
  return {{"cell_lengths", model.cell_lengths()},
          {"n_samples", loop.samples.size()},
          {"winding", w}};
}

} // namespace homprop
