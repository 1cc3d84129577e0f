#ifndef DOTINC_SUBSPACE_HPP
#define DOTINC_SUBSPACE_HPP

// Canonical enumeration of k-dimensional subspaces of F_p^n and the
// subspace operations used by the incidence graph.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dotinc/field.hpp"
#include "dotinc/quadform.hpp"

namespace dotinc {

/// Raised when a requested computation exceeds the desk-scale limits.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kEnumerationGuard = 10'000'000;

/// Number of k-dimensional subspaces of F_q^n (product formula).
/// Saturates at UINT64_MAX.
inline std::uint64_t gaussian_binomial(std::uint64_t q, std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  // prod_{i<k} (q^(n-i) - 1) / (q^(i+1) - 1), kept exact by dividing as we go:
  // after step i the partial product is the Gaussian binomial [n-k+i+1, i+1].
  unsigned __int128 acc = 1;
  constexpr unsigned __int128 cap = ~static_cast<std::uint64_t>(0);
  auto qpow = [&](std::uint64_t e) {
    unsigned __int128 r = 1;
    for (std::uint64_t i = 0; i < e; ++i) {
      r *= q;
      if (r > cap) return cap + 1;
    }
    return r;
  };
  for (std::uint64_t i = 0; i < k; ++i) {
    const unsigned __int128 num = qpow(n - k + i + 1) - 1;
    const unsigned __int128 den = qpow(i + 1) - 1;
    if (num > cap || acc > cap) return ~static_cast<std::uint64_t>(0);
    acc = acc * num / den;
  }
  return acc > cap ? ~static_cast<std::uint64_t>(0) : static_cast<std::uint64_t>(acc);
}

/// A subspace of F_p^n held by its unique RREF basis.
class Subspace {
 public:
  /// Span of the given rows (need not be independent or reduced).
  static Subspace span_of(const FqMatrix& rows) {
    auto r = rref(rows);
    return Subspace(std::move(r.matrix));
  }

  /// Trusts that `basis` is already in RREF with no zero rows.
  static Subspace from_canonical(FqMatrix basis, std::optional<IsoType> type = std::nullopt) {
    Subspace s(std::move(basis));
    s.type_ = type;
    return s;
  }

  std::size_t ambient_dim() const noexcept { return basis_.cols(); }
  std::size_t dim() const noexcept { return basis_.rows(); }
  const FqMatrix& basis() const noexcept { return basis_; }
  const FieldCtx& ctx() const noexcept { return basis_.ctx(); }

  IsoType iso_type() const { return type_ ? *type_ : isometry_type(basis_); }
  const std::optional<IsoType>& cached_type() const noexcept { return type_; }

  bool operator==(const Subspace& o) const { return basis_ == o.basis_; }

 private:
  explicit Subspace(FqMatrix basis) : basis_(std::move(basis)) {}
  FqMatrix basis_;
  std::optional<IsoType> type_;
};

/// Calls fn(std::span<const residue>) with the flat k x n RREF basis of every
/// k-dimensional subspace of F_p^n. Order: pivot-column sets in lexicographic
/// order; within a pivot set the free entries (row-major) count like an
/// odometer whose last digit turns fastest.
template <class Fn>
void for_each_subspace(const FieldCtx& f, std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) throw std::invalid_argument("subspace dimension exceeds ambient dimension");
  const std::uint64_t total = gaussian_binomial(f.p(), n, k);
  if (total > kEnumerationGuard)
    throw SizeGuardError("parameters exceed desk scale: " + std::to_string(total) +
                         " subspaces exceed the enumeration guard of " +
                         std::to_string(kEnumerationGuard));

  std::vector<residue> basis(k * n, 0);
  if (k == 0) {
    fn(std::span<const residue>(basis));
    return;
  }
  std::vector<std::size_t> pivots(k);
  for (std::size_t i = 0; i < k; ++i) pivots[i] = i;
  std::vector<std::size_t> free_pos;
  std::vector<bool> is_pivot(n);

  while (true) {
    std::fill(basis.begin(), basis.end(), 0);
    std::fill(is_pivot.begin(), is_pivot.end(), false);
    for (std::size_t i = 0; i < k; ++i) {
      basis[i * n + pivots[i]] = 1;
      is_pivot[pivots[i]] = true;
    }
    free_pos.clear();
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = pivots[i] + 1; j < n; ++j)
        if (!is_pivot[j]) free_pos.push_back(i * n + j);

    while (true) {
      fn(std::span<const residue>(basis));
      std::size_t d = free_pos.size();
      while (d > 0) {
        residue& e = basis[free_pos[d - 1]];
        if (++e < f.p()) break;
        e = 0;
        --d;
      }
      if (d == 0) break;
    }

    // next pivot combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && pivots[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) break;
    ++pivots[i - 1];
    for (std::size_t j = i; j < k; ++j) pivots[j] = pivots[j - 1] + 1;
  }
}

inline std::vector<Subspace> enumerate_subspaces(const FieldCtx& f, std::size_t n, std::size_t k) {
  std::vector<Subspace> out;
  out.reserve(static_cast<std::size_t>(gaussian_binomial(f.p(), n, k)));
  for_each_subspace(f, n, k, [&](std::span<const residue> b) {
    FqMatrix m(f, k, n);
    std::copy(b.begin(), b.end(), m.data().begin());
    out.push_back(Subspace::from_canonical(std::move(m)));
  });
  return out;
}

namespace detail {

/// Isometry type of a flat k x n basis; `scratch` must hold k*k entries.
inline IsoType flat_basis_type(const FieldCtx& f, std::span<const residue> b, std::size_t k,
                               std::size_t n, std::span<residue> scratch) {
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      std::uint64_t acc = 0;
      for (std::size_t l = 0; l < n; ++l) acc += static_cast<std::uint64_t>(b[i * n + l]) * b[j * n + l];
      scratch[i * k + j] = scratch[j * k + i] = static_cast<residue>(acc % f.p());
    }
  const auto [r, disc] = classify_gram_inplace(f, scratch, k);
  return {k, r, disc};
}

}  // namespace detail

/// The subspaces of the given isometry type, classified and in enumeration order.
inline std::vector<Subspace> subspaces_of_type(const FieldCtx& f, std::size_t n, std::size_t k,
                                               const IsoType& want) {
  std::vector<Subspace> out;
  std::vector<residue> g(k * k);
  for_each_subspace(f, n, k, [&](std::span<const residue> b) {
    const IsoType t = detail::flat_basis_type(f, b, k, n, g);
    if (t != want) return;
    FqMatrix m(f, k, n);
    std::copy(b.begin(), b.end(), m.data().begin());
    out.push_back(Subspace::from_canonical(std::move(m), t));
  });
  return out;
}

inline std::vector<Subspace> dot_subspaces(const FieldCtx& f, std::size_t n, std::size_t k) {
  return subspaces_of_type(f, n, k, IsoType::dot(k));
}

struct TypeCensus {
  std::uint64_t q = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::map<IsoType, std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (const auto& [t, c] : counts) s += c;
    return s;
  }
  std::uint64_t count(const IsoType& t) const {
    auto it = counts.find(t);
    return it == counts.end() ? 0 : it->second;
  }
};

inline TypeCensus census(const FieldCtx& f, std::size_t n, std::size_t k) {
  TypeCensus c{f.p(), n, k, {}};
  std::vector<residue> g(k * k);
  for_each_subspace(f, n, k, [&](std::span<const residue> b) {
    ++c.counts[detail::flat_basis_type(f, b, k, n, g)];
  });
  return c;
}

/// q^{k(n-k)}/2: the leading-order count of dot_k (and of ldot_k) subspaces.
inline double census_formula(std::uint64_t q, std::size_t n, std::size_t k) {
  return std::pow(static_cast<double>(q), static_cast<double>(k * (n - k))) / 2.0;
}

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// Header: q,n,k,rank,disc_class,exact_count,formula_value,ratio. The formula
/// columns are filled only for full-rank rows.
inline std::string census_csv(std::span<const TypeCensus> rows) {
  std::string out = "q,n,k,rank,disc_class,exact_count,formula_value,ratio\n";
  for (const auto& c : rows) {
    for (const auto& [t, count] : c.counts) {
      out += std::to_string(c.q) + ',' + std::to_string(c.n) + ',' + std::to_string(c.k) + ',' +
             std::to_string(t.rank) + ',' + to_string(t.disc) + ',' + std::to_string(count) + ',';
      if (t.nondegenerate()) {
        const double formula = census_formula(c.q, c.n, c.k);
        out += format_double(formula) + ',' + format_double(static_cast<double>(count) / formula);
      } else {
        out += ',';
      }
      out += '\n';
    }
  }
  return out;
}

inline void require_same_ambient(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.ctx().p() != b.ctx().p())
    throw std::invalid_argument("subspaces live in different ambient spaces");
}

inline Subspace subspace_sum(const Subspace& a, const Subspace& b) {
  require_same_ambient(a, b);
  return Subspace::span_of(stack(a.basis(), b.basis()));
}

/// True iff b is a subspace of a.
inline bool contains(const Subspace& a, const Subspace& b) {
  require_same_ambient(a, b);
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (!in_row_space(b.basis().row(i), a.basis())) return false;
  return true;
}

/// Annihilator {x : <v, x> = 0 for all v in s} under the standard pairing.
inline FqMatrix annihilator(const Subspace& s) { return kernel(s.basis()); }

/// a ∩ b computed as the annihilator of ann(a) + ann(b).
inline Subspace intersection(const Subspace& a, const Subspace& b) {
  require_same_ambient(a, b);
  return Subspace::from_canonical(kernel(stack(annihilator(a), annihilator(b))));
}

}  // namespace dotinc

#endif  // DOTINC_SUBSPACE_HPP
