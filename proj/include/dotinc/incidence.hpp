#ifndef DOTINC_INCIDENCE_HPP
#define DOTINC_INCIDENCE_HPP

// The bipartite incidence graph between dot_k- and dot_h-subspaces, and the
// exact structure of N N^T.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dotinc/field.hpp"
#include "dotinc/quadform.hpp"
#include "dotinc/subspace.hpp"

namespace dotinc {

/// A structural identity that must hold exactly was violated.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense boolean matrix, rows packed into 64-bit words.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_((cols + 63) / 64), bits_(rows * words_, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t words_per_row() const noexcept { return words_; }

  void set(std::size_t r, std::size_t c, bool v = true) {
    const std::uint64_t mask = std::uint64_t{1} << (c % 64);
    auto& w = bits_[r * words_ + c / 64];
    w = v ? (w | mask) : (w & ~mask);
  }
  bool test(std::size_t r, std::size_t c) const {
    return (bits_[r * words_ + c / 64] >> (c % 64)) & 1u;
  }
  std::span<const std::uint64_t> row(std::size_t r) const { return {bits_.data() + r * words_, words_}; }

  std::uint64_t row_count(std::size_t r) const {
    std::uint64_t s = 0;
    for (auto w : row(r)) s += static_cast<std::uint64_t>(std::popcount(w));
    return s;
  }

  /// Number of common set bits of two packed rows.
  static std::uint64_t and_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    return s;
  }

  BitMatrix transposed() const {
    BitMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t w = 0; w < words_; ++w) {
        std::uint64_t bits = bits_[r * words_ + w];
        while (bits) {
          const int b = std::countr_zero(bits);
          t.set(w * 64 + static_cast<std::size_t>(b), r);
          bits &= bits - 1;
        }
      }
    return t;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct IncidenceParams {
  std::uint64_t q = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t h = 0;
};

inline constexpr std::uint64_t kBiadjacencyBitGuard = 4'000'000'000ull;

/// G = (A ∪ B, E): A the dot_k-subspaces, B the dot_h-subspaces, K ~ H iff K ⊂ H.
/// Vertex ids are positions in enumeration order.
class IncidenceGraph {
 public:
  /// Graph with an explicit biadjacency and optional subspace labels.
  IncidenceGraph(IncidenceParams params, std::shared_ptr<const FieldCtx> field, std::vector<Subspace> part_a,
                 std::vector<Subspace> part_b, BitMatrix biadjacency)
      : params_(params),
        field_(std::move(field)),
        part_a_(std::move(part_a)),
        part_b_(std::move(part_b)),
        rows_(std::move(biadjacency)),
        cols_(rows_.transposed()) {}

  /// Unlabelled graph from a biadjacency alone.
  static IncidenceGraph from_biadjacency(BitMatrix biadjacency) {
    return IncidenceGraph({}, nullptr, {}, {}, std::move(biadjacency));
  }

  const IncidenceParams& params() const noexcept { return params_; }
  const FieldCtx* field() const noexcept { return field_.get(); }
  const std::vector<Subspace>& part_a() const noexcept { return part_a_; }
  const std::vector<Subspace>& part_b() const noexcept { return part_b_; }
  bool labelled() const noexcept { return !part_a_.empty() || !part_b_.empty(); }

  std::size_t size_a() const noexcept { return rows_.rows(); }
  std::size_t size_b() const noexcept { return rows_.cols(); }

  /// N, one packed row per A-vertex.
  const BitMatrix& biadjacency() const noexcept { return rows_; }
  /// N^T, one packed row per B-vertex.
  const BitMatrix& biadjacency_t() const noexcept { return cols_; }

  bool adjacent(std::size_t a, std::size_t b) const { return rows_.test(a, b); }

  std::uint64_t edges() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < size_a(); ++i) s += rows_.row_count(i);
    return s;
  }

 private:
  IncidenceParams params_;
  std::shared_ptr<const FieldCtx> field_;
  std::vector<Subspace> part_a_;
  std::vector<Subspace> part_b_;
  BitMatrix rows_;
  BitMatrix cols_;
};

inline void require_incidence_params(std::uint64_t q, std::size_t n, std::size_t k, std::size_t h) {
  require_odd_prime(q);
  if (!(0 < k && k < h && h < n))
    throw std::invalid_argument("incidence graph needs 0 < k < h < n (got k=" + std::to_string(k) +
                                ", h=" + std::to_string(h) + ", n=" + std::to_string(n) + ")");
}

inline IncidenceGraph build_graph(std::uint64_t q, std::size_t n, std::size_t k, std::size_t h) {
  require_incidence_params(q, n, k, h);
  auto field = std::make_shared<const FieldCtx>(q);
  const FieldCtx& f = *field;
  auto part_a = dot_subspaces(f, n, k);
  auto part_b = dot_subspaces(f, n, h);
  if (part_a.empty() || part_b.empty()) throw StructureError("empty part in incidence graph");
  if (static_cast<double>(part_a.size()) * static_cast<double>(part_b.size()) >
      static_cast<double>(kBiadjacencyBitGuard))
    throw SizeGuardError("parameters exceed desk scale: biadjacency of " + std::to_string(part_a.size()) +
                         " x " + std::to_string(part_b.size()) + " exceeds the bit guard");

  // K ⊂ H iff every basis row of K pairs to zero with the annihilator of H.
  const std::size_t co = n - h;
  std::vector<residue> ann(part_b.size() * co * n);
  for (std::size_t j = 0; j < part_b.size(); ++j) {
    const FqMatrix a = annihilator(part_b[j]);
    std::copy(a.data().begin(), a.data().end(), ann.begin() + static_cast<std::ptrdiff_t>(j * co * n));
  }
  BitMatrix bits(part_a.size(), part_b.size());
  for (std::size_t i = 0; i < part_a.size(); ++i) {
    const auto basis = part_a[i].basis().data();
    for (std::size_t j = 0; j < part_b.size(); ++j) {
      const residue* aj = ann.data() + j * co * n;
      bool inside = true;
      for (std::size_t r = 0; r < k && inside; ++r)
        for (std::size_t c = 0; c < co && inside; ++c) {
          std::uint64_t acc = 0;
          for (std::size_t l = 0; l < n; ++l) acc += static_cast<std::uint64_t>(basis[r * n + l]) * aj[c * n + l];
          inside = acc % q == 0;
        }
      if (inside) bits.set(i, j);
    }
  }
  return IncidenceGraph({q, n, k, h}, std::move(field), std::move(part_a), std::move(part_b), std::move(bits));
}

/// q^e / 2 for integer e (possibly negative).
inline double half_q_pow(std::uint64_t q, long long e) {
  return std::pow(static_cast<double>(q), static_cast<double>(e)) / 2.0;
}

struct DegreeCheck {
  std::uint64_t left_degree = 0;   // a: dot_h-subspaces through one dot_k-subspace
  std::uint64_t right_degree = 0;  // dot_k-subspaces inside one dot_h-subspace
  double formula_a = 0.0;          // q^{(h-k)(n-h)}/2
  double ratio = 0.0;              // left_degree / formula_a
};

/// Exact degrees; throws StructureError unless the graph is biregular.
inline DegreeCheck degree_check(const IncidenceGraph& g) {
  const auto& n = g.biadjacency();
  const auto& nt = g.biadjacency_t();
  if (g.size_a() == 0 || g.size_b() == 0) throw StructureError("empty part");
  DegreeCheck d;
  d.left_degree = n.row_count(0);
  for (std::size_t i = 1; i < g.size_a(); ++i)
    if (n.row_count(i) != d.left_degree)
      throw StructureError("graph is not biregular on A: vertex " + std::to_string(i) + " has degree " +
                           std::to_string(n.row_count(i)) + ", vertex 0 has " + std::to_string(d.left_degree));
  d.right_degree = nt.row_count(0);
  for (std::size_t j = 1; j < g.size_b(); ++j)
    if (nt.row_count(j) != d.right_degree)
      throw StructureError("graph is not biregular on B: vertex " + std::to_string(j) + " has degree " +
                           std::to_string(nt.row_count(j)) + ", vertex 0 has " +
                           std::to_string(d.right_degree));
  const auto& p = g.params();
  if (p.q != 0) {
    d.formula_a = half_q_pow(p.q, static_cast<long long>((p.h - p.k) * (p.n - p.h)));
    d.ratio = static_cast<double>(d.left_degree) / d.formula_a;
  }
  return d;
}

/// Dimension and isometry type of K + K'. Self-pairs use t = k.
struct PairClass {
  std::size_t t = 0;
  IsoType sum_type;

  auto operator<=>(const PairClass&) const = default;
  std::string name() const { return "t=" + std::to_string(t) + ":" + sum_type.name(); }
};

namespace detail {

inline PairClass decode_code(std::size_t k, std::size_t code) {
  const auto disc = static_cast<DiscClass>(code % 3);
  code /= 3;
  const std::size_t r = code % (2 * k + 1);
  const std::size_t t = code / (2 * k + 1);
  return {t, IsoType{t, r, disc}};
}

/// Classifies pairs of k-subspaces of F_p^n by the type of their sum without
/// materializing the sum: t = rank of the stacked bases, and the form on
/// K + K' is the nondegenerate part of the 2k x 2k Gram of the stacked rows.
class PairClassifier {
 public:
  PairClassifier(const FieldCtx& f, std::span<const Subspace> subspaces, std::size_t n, std::size_t k)
      : f_(f), n_(n), k_(k), bases_(subspaces.size() * k * n), grams_(subspaces.size() * k * k) {
    for (std::size_t s = 0; s < subspaces.size(); ++s) {
      const auto b = subspaces[s].basis().data();
      std::copy(b.begin(), b.end(), bases_.begin() + static_cast<std::ptrdiff_t>(s * k * n));
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) grams_[s * k * k + i * k + j] = dot(b.data() + i * n, b.data() + j * n);
    }
    stack_.resize(2 * k * n);
    gram_.resize(4 * k * k);
  }

  std::size_t code_count() const noexcept { return (2 * k_ + 1) * (2 * k_ + 1) * 3; }

  std::size_t classify(std::size_t a, std::size_t b) {
    const std::size_t kn = k_ * n_, m = 2 * k_;
    const residue* ba = bases_.data() + a * kn;
    const residue* bb = bases_.data() + b * kn;
    std::copy(ba, ba + kn, stack_.begin());
    std::copy(bb, bb + kn, stack_.begin() + static_cast<std::ptrdiff_t>(kn));
    const std::size_t t = rref_inplace(f_, stack_, m, n_);

    const residue* ga = grams_.data() + a * k_ * k_;
    const residue* gb = grams_.data() + b * k_ * k_;
    for (std::size_t i = 0; i < k_; ++i)
      for (std::size_t j = 0; j < k_; ++j) {
        gram_[i * m + j] = ga[i * k_ + j];
        gram_[(k_ + i) * m + k_ + j] = gb[i * k_ + j];
        const residue c = dot(ba + i * n_, bb + j * n_);
        gram_[i * m + k_ + j] = c;
        gram_[(k_ + j) * m + i] = c;
      }
    const auto [r, disc] = classify_gram_inplace(f_, gram_, m);
    return (t * (2 * k_ + 1) + r) * 3 + static_cast<std::size_t>(disc);
  }

 private:
  residue dot(const residue* x, const residue* y) const noexcept {
    std::uint64_t acc = 0;
    for (std::size_t l = 0; l < n_; ++l) acc += static_cast<std::uint64_t>(x[l]) * y[l];
    return static_cast<residue>(acc % f_.p());
  }

  const FieldCtx& f_;
  std::size_t n_, k_;
  std::vector<residue> bases_;
  std::vector<residue> grams_;
  std::vector<residue> stack_;
  std::vector<residue> gram_;
};

/// Rows examined by the pair scans: all of them when |A|^2 fits the dense
/// guard, otherwise `sample_rows` evenly spaced rows.
inline std::vector<std::size_t> scan_rows(std::size_t size, std::uint64_t guard, std::size_t sample_rows) {
  std::vector<std::size_t> rows;
  if (static_cast<double>(size) * static_cast<double>(size) <= static_cast<double>(guard)) {
    rows.resize(size);
    for (std::size_t i = 0; i < size; ++i) rows[i] = i;
    return rows;
  }
  const std::size_t count = std::min(sample_rows, size);
  for (std::size_t j = 0; j < count; ++j) rows.push_back(j * size / count);
  return rows;
}

}  // namespace detail

struct ScanOptions {
  std::uint64_t dense_guard = 800'000'000;  // |A|^2 entries
  std::size_t sample_rows = 64;
};

struct ClassRecord {
  PairClass cls;
  std::uint64_t b = 0;               // common N N^T entry for the class
  std::uint64_t degree_min = 0;      // per-row number of K' in the class
  std::uint64_t degree_max = 0;
  std::uint64_t ordered_pairs = 0;   // over examined rows
  std::optional<double> b_formula;       // q^{(h-t)(n-h)}/2
  std::optional<double> degree_formula;  // q^{(t-k)(n+2k-2t)}/2
};

struct DecompositionReport {
  IncidenceParams params;
  std::uint64_t a = 0;             // common diagonal of N N^T
  std::uint64_t row_sum = 0;       // common row sum of N N^T
  std::uint64_t right_degree = 0;  // dot_k-subspaces inside a dot_h-subspace
  std::uint64_t trace = 0;         // over examined rows
  std::size_t rows_examined = 0;
  bool sampled = false;
  std::vector<ClassRecord> classes;  // off-diagonal classes, ordered by PairClass

  bool row_sum_is_a_times_right_degree() const { return row_sum == a * right_degree; }

  /// a + sum over classes of (per-row class size x b) == row sum.
  bool accounting_exact() const {
    std::uint64_t s = a;
    for (const auto& c : classes) {
      if (c.degree_min != c.degree_max) return false;
      s += c.degree_min * c.b;
    }
    return s == row_sum;
  }
};

namespace detail {

inline std::optional<double> b_formula(const IncidenceParams& p, const PairClass& c) {
  if (!c.sum_type.nondegenerate() || c.t > p.h) return std::nullopt;
  return half_q_pow(p.q, static_cast<long long>((p.h - c.t) * (p.n - p.h)));
}

inline std::optional<double> et_formula(std::uint64_t q, std::size_t n, std::size_t k, const PairClass& c) {
  if (!c.sum_type.nondegenerate()) return std::nullopt;
  const long long t = static_cast<long long>(c.t), kk = static_cast<long long>(k),
                  nn = static_cast<long long>(n);
  return half_q_pow(q, (t - kk) * (nn + 2 * kk - 2 * t));
}

/// Per-row class counts over the examined rows, plus (when `nnt` is given)
/// the N N^T value seen for every class. Works on i < j pairs when all rows
/// are examined.
struct PairScan {
  std::vector<std::size_t> rows;
  std::vector<std::vector<std::uint64_t>> counts;  // [examined row][code]
  std::vector<std::optional<std::uint64_t>> value;  // [code]
};

inline PairScan scan_pairs(const FieldCtx& f, std::span<const Subspace> part, std::size_t n, std::size_t k,
                           const BitMatrix* nnt_rows, const ScanOptions& opt) {
  PairClassifier cls(f, part, n, k);
  PairScan scan;
  scan.rows = scan_rows(part.size(), opt.dense_guard, opt.sample_rows);
  const std::size_t codes = cls.code_count();
  scan.counts.assign(scan.rows.size(), std::vector<std::uint64_t>(codes, 0));
  scan.value.assign(codes, std::nullopt);
  const bool full = scan.rows.size() == part.size();

  auto record = [&](std::size_t i, std::size_t j, std::size_t code) {
    if (!nnt_rows) return;
    const std::uint64_t v = BitMatrix::and_count(nnt_rows->row(i), nnt_rows->row(j));
    auto& slot = scan.value[code];
    if (!slot) {
      slot = v;
    } else if (*slot != v) {
      throw StructureError("N N^T is not constant on pair class " + decode_code(k, code).name() + ": entry (" +
                           std::to_string(i) + "," + std::to_string(j) + ") = " + std::to_string(v) +
                           ", expected " + std::to_string(*slot));
    }
  };

  if (full) {
    for (std::size_t i = 0; i < part.size(); ++i)
      for (std::size_t j = i + 1; j < part.size(); ++j) {
        const std::size_t code = cls.classify(i, j);
        ++scan.counts[i][code];
        ++scan.counts[j][code];
        record(i, j, code);
      }
  } else {
    for (std::size_t r = 0; r < scan.rows.size(); ++r) {
      const std::size_t i = scan.rows[r];
      for (std::size_t j = 0; j < part.size(); ++j) {
        if (j == i) continue;
        const std::size_t code = cls.classify(i, j);
        ++scan.counts[r][code];
        record(i, j, code);
      }
    }
  }
  return scan;
}


}  // namespace detail

/// Exact N N^T = aI + sum over pair classes of b_class E_class, keyed by
/// (dim(K+K'), type of K+K'). Throws StructureError when an entry is not
/// constant on its class or the graph is not biregular.
inline DecompositionReport nnt_decompose(const IncidenceGraph& g, const ScanOptions& opt = {}) {
  if (!g.labelled() || g.field() == nullptr) throw std::invalid_argument("nnt_decompose needs a labelled graph");
  const DegreeCheck deg = degree_check(g);
  const auto& p = g.params();
  const auto scan = detail::scan_pairs(*g.field(), g.part_a(), p.n, p.k, &g.biadjacency(), opt);

  DecompositionReport rep;
  rep.params = p;
  rep.right_degree = deg.right_degree;
  rep.rows_examined = scan.rows.size();
  rep.sampled = scan.rows.size() != g.size_a();
  const auto& nmat = g.biadjacency();
  rep.a = nmat.row_count(scan.rows.front());

  bool first = true;
  for (std::size_t r = 0; r < scan.rows.size(); ++r) {
    const std::size_t i = scan.rows[r];
    const std::uint64_t diag = nmat.row_count(i);
    if (diag != rep.a) throw StructureError("N N^T diagonal is not constant at row " + std::to_string(i));
    rep.trace += diag;
    std::uint64_t sum = diag;
    for (std::size_t code = 0; code < scan.counts[r].size(); ++code)
      if (scan.counts[r][code]) sum += scan.counts[r][code] * scan.value[code].value();
    if (first) {
      rep.row_sum = sum;
      first = false;
    } else if (sum != rep.row_sum) {
      throw StructureError("N N^T row sums differ at row " + std::to_string(i));
    }
  }

  const std::size_t codes = scan.value.size();
  for (std::size_t code = 0; code < codes; ++code) {
    if (!scan.value[code]) continue;
    ClassRecord rec;
    rec.cls = detail::decode_code(p.k, code);
    rec.b = *scan.value[code];
    rec.degree_min = UINT64_MAX;
    for (const auto& row : scan.counts) {
      rec.degree_min = std::min(rec.degree_min, row[code]);
      rec.degree_max = std::max(rec.degree_max, row[code]);
      rec.ordered_pairs += row[code];
    }
    rec.b_formula = detail::b_formula(p, rec.cls);
    rec.degree_formula = detail::et_formula(p.q, p.n, p.k, rec.cls);
    rep.classes.push_back(rec);
  }
  std::sort(rep.classes.begin(), rep.classes.end(),
            [](const ClassRecord& x, const ClassRecord& y) { return x.cls < y.cls; });
  return rep;
}

struct EtClassDegree {
  PairClass cls;
  std::uint64_t degree_min = 0;
  std::uint64_t degree_max = 0;
  std::optional<double> formula;  // q^{(t-k)(n+2k-2t)}/2 for nondegenerate sums
};

struct EtProfile {
  std::uint64_t q = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t vertices = 0;
  std::size_t rows_examined = 0;
  bool sampled = false;
  std::vector<EtClassDegree> classes;

  bool constant_degrees() const {
    return std::all_of(classes.begin(), classes.end(),
                       [](const EtClassDegree& c) { return c.degree_min == c.degree_max; });
  }

  /// For dimension t: whether the largest class degree is attained by a
  /// nondegenerate sum type.
  bool max_at_nondegenerate(std::size_t t) const {
    std::uint64_t best = 0;
    bool nondeg = false;
    for (const auto& c : classes) {
      if (c.cls.t != t) continue;
      if (c.degree_max > best) {
        best = c.degree_max;
        nondeg = c.cls.sum_type.nondegenerate();
      } else if (c.degree_max == best && c.cls.sum_type.nondegenerate()) {
        nondeg = true;
      }
    }
    return nondeg;
  }
};

/// Degrees of the graphs on dot_k-subspaces joining K, K' by class of K + K'.
inline EtProfile et_degree_profile(const FieldCtx& f, std::size_t n, std::size_t k, const ScanOptions& opt = {}) {
  const auto part = dot_subspaces(f, n, k);
  EtProfile prof{f.p(), n, k, part.size(), 0, false, {}};
  if (part.size() < 2) return prof;
  const auto scan = detail::scan_pairs(f, part, n, k, nullptr, opt);
  prof.rows_examined = scan.rows.size();
  prof.sampled = scan.rows.size() != part.size();
  const std::size_t codes = scan.value.size();
  for (std::size_t code = 0; code < codes; ++code) {
    EtClassDegree c;
    c.cls = detail::decode_code(k, code);
    c.degree_min = UINT64_MAX;
    bool seen = false;
    for (const auto& row : scan.counts) {
      seen = seen || row[code] != 0;
      c.degree_min = std::min(c.degree_min, row[code]);
      c.degree_max = std::max(c.degree_max, row[code]);
    }
    if (!seen) continue;
    c.formula = detail::et_formula(f.p(), n, k, c.cls);
    prof.classes.push_back(c);
  }
  std::sort(prof.classes.begin(), prof.classes.end(),
            [](const EtClassDegree& x, const EtClassDegree& y) { return x.cls < y.cls; });
  return prof;
}

struct ErrorExponent {
  long long twice_exponent = 0;  // k(2h-n-2k+4) + h(n-h-1) - 2
  double exponent = 0.0;
  double value = 0.0;            // q^exponent
  long long main_term_exponent = 0;  // k(n-h)
  bool hypotheses_hold = false;      // k > 1 and h >= 4k-4
  std::vector<std::string> warnings;
};

inline ErrorExponent formula_error_exponent(std::uint64_t q, std::size_t n, std::size_t k, std::size_t h) {
  const long long N = static_cast<long long>(n), K = static_cast<long long>(k), H = static_cast<long long>(h);
  ErrorExponent e;
  e.twice_exponent = K * (2 * H - N - 2 * K + 4) + H * (N - H - 1) - 2;
  e.exponent = static_cast<double>(e.twice_exponent) / 2.0;
  e.value = std::pow(static_cast<double>(q), e.exponent);
  e.main_term_exponent = K * (N - H);
  if (K <= 1) e.warnings.push_back("k > 1 does not hold");
  if (H < 4 * K - 4) e.warnings.push_back("h >= 4k-4 does not hold");
  e.hypotheses_hold = e.warnings.empty();
  return e;
}

}  // namespace dotinc

#endif  // DOTINC_INCIDENCE_HPP
