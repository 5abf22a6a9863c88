#pragma once

// Words over fundamental-group generators, normal forms, and unitary
// representations E with the composition convention E(c1.c2) = E(c2) E(c1).

#include "homprop/errors.hpp"
#include "homprop/linalg.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace homprop {

struct GroupPresentation {
  enum class Kind { FreeAbelian, Free, SymmetricS3, Braid };

  Kind kind = Kind::Free;
  /// d for FreeAbelian, rank for Free, strands for Braid, 2 for SymmetricS3.
  int param = 1;

  static GroupPresentation free_abelian(int d) { return make(Kind::FreeAbelian, d); }
  static GroupPresentation free(int rank) { return make(Kind::Free, rank); }
  static GroupPresentation symmetric_s3() { return make(Kind::SymmetricS3, 2); }
  static GroupPresentation braid(int strands) {
    if (strands < 2)
      throw InvalidArgument("braid group needs at least 2 strands");
    return {Kind::Braid, strands};
  }

  int generator_count() const { return kind == Kind::Braid ? param - 1 : param; }

  std::string name() const {
    switch (kind) {
    case Kind::FreeAbelian: return "FreeAbelian(" + std::to_string(param) + ")";
    case Kind::Free: return "Free(" + std::to_string(param) + ")";
    case Kind::SymmetricS3: return "SymmetricS3";
    case Kind::Braid: return "Braid(" + std::to_string(param) + ")";
    }
    return "?";
  }

  friend bool operator==(const GroupPresentation &, const GroupPresentation &) = default;

private:
  static GroupPresentation make(Kind k, int p) {
    if (p < 1)
      throw InvalidArgument("presentation parameter must be positive");
    return {k, p};
  }
};

/// One signed generator; generator indices are zero-based.
struct Letter {
  int generator = 0;
  int sign = 1;
  friend bool operator==(const Letter &, const Letter &) = default;
};

/// Letters are read left to right in chronological order.
struct GroupWord {
  GroupPresentation presentation;
  std::vector<Letter> letters;

  bool empty() const { return letters.empty(); }
  std::size_t size() const { return letters.size(); }
  friend bool operator==(const GroupWord &, const GroupWord &) = default;
};

inline void validate_word(const GroupWord &w) {
  const int n = w.presentation.generator_count();
  for (const auto &l : w.letters) {
    if (l.generator < 0 || l.generator >= n)
      throw MalformedWord("generator index " + std::to_string(l.generator) +
                          " out of range for " + w.presentation.name());
    if (l.sign != 1 && l.sign != -1)
      throw MalformedWord("letter exponent must be +1 or -1");
  }
}

/// Builds a word from signed 1-based generator labels, e.g. {1, -2} = g1 g2^-1.
inline GroupWord make_word(const GroupPresentation &p, std::initializer_list<int> signed_labels) {
  GroupWord w{p, {}};
  for (int s : signed_labels) {
    if (s == 0)
      throw MalformedWord("generator label 0 is not allowed (labels are 1-based)");
    w.letters.push_back({std::abs(s) - 1, s > 0 ? 1 : -1});
  }
  validate_word(w);
  return w;
}

inline std::string to_string(const GroupWord &w) {
  if (w.empty())
    return "e";
  std::ostringstream os;
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    if (i)
      os << ' ';
    os << 'g' << (w.letters[i].generator + 1);
    if (w.letters[i].sign < 0)
      os << "^-1";
  }
  return os.str();
}

inline std::vector<int> signed_labels(const GroupWord &w) {
  std::vector<int> out;
  out.reserve(w.size());
  for (const auto &l : w.letters)
    out.push_back(l.sign * (l.generator + 1));
  return out;
}

inline GroupWord inverse(const GroupWord &w) {
  GroupWord r{w.presentation, {}};
  r.letters.reserve(w.size());
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it)
    r.letters.push_back({it->generator, -it->sign});
  return r;
}

// ---------------------------------------------------------------------------
// Normal forms

/// Exponent vector of a word in the abelianization.
inline std::vector<long> exponent_vector(const GroupWord &w) {
  std::vector<long> e(static_cast<std::size_t>(w.presentation.generator_count()), 0);
  for (const auto &l : w.letters)
    e[static_cast<std::size_t>(l.generator)] += l.sign;
  return e;
}

/// Elements of S3, labelled by their image in the standard representation.
/// Under E(c1.c2) = E(c2)E(c1), the word t1.t2 maps to E2 E1 = E-.
enum class S3Element { Identity, E1, E2, E3, EPlus, EMinus };

namespace detail {

using Perm3 = std::array<int, 3>;

inline Perm3 compose(const Perm3 &outer, const Perm3 &inner) {
  return {outer[inner[0]], outer[inner[1]], outer[inner[2]]};
}

// t1 swaps axes 2,3 and t2 swaps axes 1,3, as the sign-free parts of E1, E2.
inline Perm3 s3_letter(int generator) {
  return generator == 0 ? Perm3{0, 2, 1} : Perm3{2, 1, 0};
}

inline Perm3 s3_perm(const GroupWord &w) {
  Perm3 p{0, 1, 2};
  for (const auto &l : w.letters)
    p = compose(s3_letter(l.generator), p);
  return p;
}

struct S3Canonical {
  S3Element element;
  std::vector<int> labels;
};

inline const std::array<S3Canonical, 6> &s3_table() {
  static const std::array<S3Canonical, 6> table{{
      {S3Element::Identity, {}},
      {S3Element::E1, {1}},
      {S3Element::E2, {2}},
      {S3Element::EMinus, {1, 2}},
      {S3Element::EPlus, {2, 1}},
      {S3Element::E3, {1, 2, 1}},
  }};
  return table;
}

inline GroupWord from_labels(const GroupPresentation &p, const std::vector<int> &labels) {
  GroupWord w{p, {}};
  for (int s : labels)
    w.letters.push_back({std::abs(s) - 1, s > 0 ? 1 : -1});
  return w;
}

inline GroupWord free_reduce(const GroupWord &w) {
  GroupWord r{w.presentation, {}};
  for (const auto &l : w.letters) {
    if (!r.letters.empty() && r.letters.back().generator == l.generator &&
        r.letters.back().sign == -l.sign)
      r.letters.pop_back();
    else
      r.letters.push_back(l);
  }
  return r;
}

} // namespace detail

inline S3Element s3_element(const GroupWord &w) {
  if (w.presentation.kind != GroupPresentation::Kind::SymmetricS3)
    throw PresentationMismatch("s3_element needs a SymmetricS3 word");
  validate_word(w);
  const auto p = detail::s3_perm(w);
  for (const auto &c : detail::s3_table())
    if (detail::s3_perm(detail::from_labels(w.presentation, c.labels)) == p)
      return c.element;
  throw MalformedWord("unreachable S3 element");
}

/// Canonical normal form. FreeAbelian words become g1^e1 g2^e2 ... with the
/// exponent vector spelled out; Free and Braid words are freely reduced;
/// SymmetricS3 words become one of e, t1, t2, t1t2, t2t1, t1t2t1.
inline GroupWord reduce_word(const GroupWord &w) {
  validate_word(w);
  using K = GroupPresentation::Kind;
  switch (w.presentation.kind) {
  case K::FreeAbelian: {
    GroupWord r{w.presentation, {}};
    const auto e = exponent_vector(w);
    for (std::size_t g = 0; g < e.size(); ++g)
      for (long k = 0; k < std::abs(e[g]); ++k)
        r.letters.push_back({static_cast<int>(g), e[g] > 0 ? 1 : -1});
    return r;
  }
  case K::Free:
  case K::Braid:
    return detail::free_reduce(w);
  case K::SymmetricS3: {
    const auto el = s3_element(w);
    for (const auto &c : detail::s3_table())
      if (c.element == el)
        return detail::from_labels(w.presentation, c.labels);
    break;
  }
  }
  throw MalformedWord("unknown presentation kind");
}

inline GroupWord concat(const GroupWord &a, const GroupWord &b) {
  if (!(a.presentation == b.presentation))
    throw PresentationMismatch("cannot concatenate words over " + a.presentation.name() +
                               " and " + b.presentation.name());
  GroupWord w{a.presentation, a.letters};
  w.letters.insert(w.letters.end(), b.letters.begin(), b.letters.end());
  return reduce_word(w);
}

/// Uniform random word of length in [0, max_length].
template <class Rng>
GroupWord random_word(const GroupPresentation &p, std::size_t max_length, Rng &rng) {
  std::uniform_int_distribution<std::size_t> len(0, max_length);
  std::uniform_int_distribution<int> gen(0, p.generator_count() - 1);
  std::bernoulli_distribution positive(0.5);
  GroupWord w{p, {}};
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i)
    w.letters.push_back({gen(rng), positive(rng) ? 1 : -1});
  return w;
}

// ---------------------------------------------------------------------------
// Representations

class UnitaryRep {
public:
  UnitaryRep(GroupPresentation presentation, std::vector<CMatrix> images)
      : presentation_(presentation), images_(std::move(images)) {
    if (static_cast<int>(images_.size()) != presentation_.generator_count())
      throw DimensionMismatch("expected " + std::to_string(presentation_.generator_count()) +
                              " generator images, got " + std::to_string(images_.size()));
    if (images_.empty())
      throw DimensionMismatch("representation needs at least one generator");
    dimension_ = images_.front().rows();
    if (dimension_ < 1)
      throw DimensionMismatch("representation dimension must be positive");
    inverses_.reserve(images_.size());
    for (const auto &m : images_) {
      if (m.rows() != dimension_ || m.cols() != dimension_)
        throw DimensionMismatch("generator images must all be square of the same size");
      Eigen::FullPivLU<CMatrix> lu(m);
      if (!lu.isInvertible())
        throw InvalidArgument("generator image is singular");
      inverses_.push_back(lu.inverse());
    }
    integer_ = std::all_of(images_.begin(), images_.end(), has_integer_entries);
  }

  const GroupPresentation &presentation() const { return presentation_; }
  Eigen::Index dimension() const { return dimension_; }
  const std::vector<CMatrix> &images() const { return images_; }
  const CMatrix &image(int generator) const { return images_.at(static_cast<std::size_t>(generator)); }
  /// All generator images have integer entries; checks then compare exactly.
  bool integer_valued() const { return integer_; }

  /// E(l_1 l_2 ... l_n) = E(l_n) ... E(l_2) E(l_1)
  CMatrix eval(const GroupWord &w) const {
    if (!(w.presentation == presentation_))
      throw PresentationMismatch("word over " + w.presentation.name() +
                                 " evaluated in a representation of " + presentation_.name());
    validate_word(w);
    CMatrix r = CMatrix::Identity(dimension_, dimension_);
    for (const auto &l : w.letters) {
      const auto g = static_cast<std::size_t>(l.generator);
      r = (l.sign > 0 ? images_[g] : inverses_[g]) * r;
    }
    return r;
  }

private:
  GroupPresentation presentation_;
  std::vector<CMatrix> images_;
  std::vector<CMatrix> inverses_;
  Eigen::Index dimension_ = 0;
  bool integer_ = false;
};

inline CMatrix rep_eval(const UnitaryRep &rep, const GroupWord &w) { return rep.eval(w); }

struct CheckReport {
  std::string check;
  bool pass = true;
  double max_defect = 0.0;
  bool exact = false;
  std::vector<std::string> witnesses;

  nlohmann::json to_json() const {
    return {{"check", check}, {"pass", pass}, {"max_defect", max_defect},
            {"exact", exact}, {"witnesses", witnesses}};
  }
};

inline constexpr double rep_tolerance = 1e-12;

namespace detail {
inline void record(CheckReport &r, double defect, const std::string &witness, bool exact) {
  const bool bad = exact ? defect != 0.0 : !(defect <= rep_tolerance);
  if (!(defect <= r.max_defect))
    r.max_defect = defect;
  if (bad) {
    r.pass = false;
    if (r.witnesses.size() < 8)
      r.witnesses.push_back(witness);
  }
}
} // namespace detail

/// Anti-morphism check ||E(w1 w2) - E(w2) E(w1)||_F on random word pairs.
inline CheckReport check_rep_homomorphism(const UnitaryRep &rep, int n_samples, std::uint64_t seed,
                                          std::size_t max_length = 10) {
  if (n_samples < 1)
    throw InvalidArgument("n_samples must be at least 1");
  CheckReport r{"homomorphism", true, 0.0, rep.integer_valued(), {}};
  std::mt19937_64 rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    const auto w1 = random_word(rep.presentation(), max_length, rng);
    const auto w2 = random_word(rep.presentation(), max_length, rng);
    const double d = (rep.eval(concat(w1, w2)) - rep.eval(w2) * rep.eval(w1)).norm();
    detail::record(r, d, "w1=[" + to_string(w1) + "] w2=[" + to_string(w2) + "]", r.exact);
  }
  return r;
}

/// M*M = I on generators and random words, and E(w^-1) = E(w)*.
inline CheckReport check_rep_unitary(const UnitaryRep &rep, std::uint64_t seed = 7, int n_words = 100,
                                     std::size_t max_length = 10) {
  CheckReport r{"unitary", true, 0.0, rep.integer_valued(), {}};
  const auto n = rep.dimension();
  const CMatrix id = CMatrix::Identity(n, n);
  for (int g = 0; g < rep.presentation().generator_count(); ++g) {
    const auto &m = rep.image(g);
    detail::record(r, (m.adjoint() * m - id).norm(), "generator g" + std::to_string(g + 1), r.exact);
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < n_words; ++s) {
    const auto w = random_word(rep.presentation(), max_length, rng);
    const CMatrix m = rep.eval(w);
    detail::record(r, (m.adjoint() * m - id).norm(), "word [" + to_string(w) + "]", r.exact);
    detail::record(r, (rep.eval(inverse(w)) - m.adjoint()).norm(),
                   "inverse of [" + to_string(w) + "]", r.exact);
  }
  return r;
}

/// b_i b_{i+1} b_i = b_{i+1} b_i b_{i+1} for every adjacent pair.
inline CheckReport check_yang_baxter(const UnitaryRep &rep) {
  const auto &p = rep.presentation();
  if (p.kind != GroupPresentation::Kind::Braid)
    throw NotApplicable("Yang-Baxter check needs a braid-group representation");
  if (p.param < 3)
    throw NotApplicable("Yang-Baxter relation needs at least 3 strands");
  CheckReport r{"yang_baxter", true, 0.0, rep.integer_valued(), {}};
  for (int i = 1; i + 1 <= p.generator_count(); ++i) {
    const auto lhs = make_word(p, {i, i + 1, i});
    const auto rhs = make_word(p, {i + 1, i, i + 1});
    detail::record(r, (rep.eval(lhs) - rep.eval(rhs)).norm(),
                   "b" + std::to_string(i) + " b" + std::to_string(i + 1) + " b" + std::to_string(i),
                   r.exact);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Named representations

/// Exact integer matrices for the six elements of the standard S3 rep.
struct S3Matrices {
  Eigen::Matrix3i e1, e2, e3, e_plus, e_minus;
};

inline S3Matrices s3_integer_matrices() {
  S3Matrices m;
  m.e1 << -1, 0, 0, 0, 0, -1, 0, -1, 0;
  m.e2 << 0, 0, -1, 0, -1, 0, -1, 0, 0;
  m.e3 << 0, -1, 0, -1, 0, 0, 0, 0, -1;
  m.e_plus << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  m.e_minus << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  return m;
}

inline CMatrix s3_image(S3Element e) {
  const auto m = s3_integer_matrices();
  switch (e) {
  case S3Element::Identity: return CMatrix::Identity(3, 3);
  case S3Element::E1: return m.e1.cast<cplx>();
  case S3Element::E2: return m.e2.cast<cplx>();
  case S3Element::E3: return m.e3.cast<cplx>();
  case S3Element::EPlus: return m.e_plus.cast<cplx>();
  case S3Element::EMinus: return m.e_minus.cast<cplx>();
  }
  return {};
}

inline UnitaryRep s3_standard_rep() {
  const auto m = s3_integer_matrices();
  return UnitaryRep(GroupPresentation::symmetric_s3(), {m.e1.cast<cplx>(), m.e2.cast<cplx>()});
}

/// F2 -> S3 quotient: l1 -> E1, l2 -> E2.
inline UnitaryRep f2_to_s3_rep() {
  const auto m = s3_integer_matrices();
  return UnitaryRep(GroupPresentation::free(2), {m.e1.cast<cplx>(), m.e2.cast<cplx>()});
}

/// One-dimensional rep with generator j -> phases[j] (any complex scalar).
inline UnitaryRep scalar_rep(const GroupPresentation &p, const std::vector<cplx> &values) {
  std::vector<CMatrix> images;
  for (const auto &v : values)
    images.push_back(CMatrix::Constant(1, 1, v));
  return UnitaryRep(p, std::move(images));
}

/// E(n) = exp(-i theta . n) over Z^d.
inline UnitaryRep bloch_scalar_rep(const std::vector<double> &theta) {
  std::vector<cplx> v;
  for (double t : theta)
    v.push_back(cis(-wrap_angle(t)));
  return scalar_rep(GroupPresentation::free_abelian(static_cast<int>(theta.size())), v);
}

/// b_j -> exp(i phases[j]).
inline UnitaryRep braid_scalar_rep(int strands, const std::vector<double> &phases) {
  std::vector<cplx> v;
  for (double a : phases)
    v.push_back(cis(a));
  return scalar_rep(GroupPresentation::braid(strands), v);
}

inline UnitaryRep identity_rep(const GroupPresentation &p, Eigen::Index dim = 1) {
  return UnitaryRep(p, std::vector<CMatrix>(static_cast<std::size_t>(p.generator_count()),
                                            CMatrix::Identity(dim, dim)));
}

// ---------------------------------------------------------------------------
// JSON: {presentation, dimension, images: per generator, row-major [re, im] pairs}

inline nlohmann::json presentation_to_json(const GroupPresentation &p) {
  using K = GroupPresentation::Kind;
  switch (p.kind) {
  case K::FreeAbelian: return {{"kind", "free_abelian"}, {"d", p.param}};
  case K::Free: return {{"kind", "free"}, {"rank", p.param}};
  case K::SymmetricS3: return {{"kind", "symmetric_s3"}};
  case K::Braid: return {{"kind", "braid"}, {"strands", p.param}};
  }
  return {};
}

inline GroupPresentation presentation_from_json(const nlohmann::json &j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    auto only = [&](std::initializer_list<const char *> keys) {
      for (auto it = j.begin(); it != j.end(); ++it)
        if (std::none_of(keys.begin(), keys.end(), [&](const char *k) { return it.key() == k; }))
          throw ConfigError("unknown presentation key '" + it.key() + "'");
    };
    if (kind == "free_abelian") {
      only({"kind", "d"});
      return GroupPresentation::free_abelian(j.at("d").get<int>());
    }
    if (kind == "free") {
      only({"kind", "rank"});
      return GroupPresentation::free(j.at("rank").get<int>());
    }
    if (kind == "symmetric_s3") {
      only({"kind"});
      return GroupPresentation::symmetric_s3();
    }
    if (kind == "braid") {
      only({"kind", "strands"});
      return GroupPresentation::braid(j.at("strands").get<int>());
    }
    throw ConfigError("unknown presentation kind '" + kind + "'");
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad presentation: ") + e.what());
  }
}

inline nlohmann::json rep_to_json(const UnitaryRep &rep) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto &m : rep.images()) {
    nlohmann::json flat = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        flat.push_back({m(r, c).real(), m(r, c).imag()});
    images.push_back(flat);
  }
  return {{"presentation", presentation_to_json(rep.presentation())},
          {"dimension", rep.dimension()},
          {"images", images}};
}

inline UnitaryRep rep_from_json(const nlohmann::json &j) {
  try {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "presentation" && it.key() != "dimension" && it.key() != "images")
        throw ConfigError("unknown representation key '" + it.key() + "'");
    const auto p = presentation_from_json(j.at("presentation"));
    const auto dim = j.at("dimension").get<Eigen::Index>();
    if (dim < 1)
      throw ConfigError("dimension must be positive");
    std::vector<CMatrix> images;
    for (const auto &flat : j.at("images")) {
      if (static_cast<Eigen::Index>(flat.size()) != dim * dim)
        throw ConfigError("image has " + std::to_string(flat.size()) + " entries, expected " +
                          std::to_string(dim * dim));
      CMatrix m(dim, dim);
      for (Eigen::Index k = 0; k < dim * dim; ++k) {
        const auto &z = flat.at(static_cast<std::size_t>(k));
        if (!z.is_array() || z.size() != 2)
          throw ConfigError("matrix entries must be [re, im] pairs");
        m(k / dim, k % dim) = {z[0].get<double>(), z[1].get<double>()};
      }
      images.push_back(std::move(m));
    }
    return UnitaryRep(p, std::move(images));
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad representation: ") + e.what());
  } catch (const DimensionMismatch &e) {
    throw ConfigError(e.what());
  }
}

} // namespace homprop
