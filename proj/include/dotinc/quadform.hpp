#ifndef DOTINC_QUADFORM_HPP
#define DOTINC_QUADFORM_HPP

// Isometry classification of quadratic subspaces of (F_p^n, x_1^2 + ... + x_n^2).
//
// Over a finite field of odd characteristic a quadratic space is determined up
// to isometry by its dimension, the rank of its Gram matrix and the square
// class of the discriminant of its nondegenerate part. The possible types of a
// k-dimensional subspace are therefore
//
//   dot_r (+) 0^(k-r)     rank r, discriminant a square
//   ldot_r (+) 0^(k-r)    rank r, discriminant a nonsquare
//   0^k                   rank 0

#include <compare>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dotinc/field.hpp"

namespace dotinc {

enum class DiscClass : std::uint8_t { None, Square, Nonsquare };

inline const char* to_string(DiscClass d) {
  switch (d) {
    case DiscClass::None: return "none";
    case DiscClass::Square: return "square";
    case DiscClass::Nonsquare: return "nonsquare";
  }
  return "?";
}

struct IsoType {
  std::size_t dim = 0;
  std::size_t rank = 0;
  DiscClass disc = DiscClass::None;

  static IsoType dot(std::size_t k) { return {k, k, DiscClass::Square}; }
  static IsoType lambda_dot(std::size_t k) { return {k, k, DiscClass::Nonsquare}; }

  bool nondegenerate() const noexcept { return rank == dim && dim > 0; }
  bool is_dot() const noexcept { return nondegenerate() && disc == DiscClass::Square; }

  /// Ordered by dim ascending, then rank descending, then Square before Nonsquare.
  std::strong_ordering operator<=>(const IsoType& o) const noexcept {
    if (auto c = dim <=> o.dim; c != 0) return c;
    if (auto c = o.rank <=> rank; c != 0) return c;
    return static_cast<int>(disc) <=> static_cast<int>(o.disc);
  }
  bool operator==(const IsoType&) const noexcept = default;

  /// "dot_3", "ldot_2+0^1", "0^2".
  std::string name() const {
    if (rank == 0) return "0^" + std::to_string(dim);
    std::string s = (disc == DiscClass::Square ? "dot_" : "ldot_") + std::to_string(rank);
    if (rank < dim) s += "+0^" + std::to_string(dim - rank);
    return s;
  }
};

/// G = B B^T: the Gram matrix of the basis rows under the dot form.
inline FqMatrix gram(const FqMatrix& basis) { return multiply(basis, transpose(basis)); }

namespace detail {

/// Symmetric congruence diagonalization of a k x k buffer in place.
/// On return the diagonal holds d_1..d_k of P G P^T; off-diagonals are zero.
inline void diagonalize_inplace(const FieldCtx& f, std::span<residue> g, std::size_t k) {
  auto at = [&](std::size_t i, std::size_t j) -> residue& { return g[i * k + j]; };
  auto swap_index = [&](std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t j = 0; j < k; ++j) std::swap(at(a, j), at(b, j));
    for (std::size_t i = 0; i < k; ++i) std::swap(at(i, a), at(i, b));
  };
  // row a += row b, col a += col b
  auto add_index = [&](std::size_t a, std::size_t b) {
    for (std::size_t j = 0; j < k; ++j) at(a, j) = f.add(at(a, j), at(b, j));
    for (std::size_t i = 0; i < k; ++i) at(i, a) = f.add(at(i, a), at(i, b));
  };

  for (std::size_t i = 0; i < k; ++i) {
    std::size_t piv = i;
    while (piv < k && at(piv, piv) == 0) ++piv;
    if (piv == k) {
      // Zero diagonal: find a nonzero off-diagonal entry and fold it in.
      std::size_t r = k, c = k;
      for (std::size_t a = i; a < k && r == k; ++a)
        for (std::size_t b = a + 1; b < k; ++b)
          if (at(a, b) != 0) {
            r = a;
            c = b;
            break;
          }
      if (r == k) return;  // remaining block is zero
      add_index(r, c);     // new diagonal entry 2*G[r][c] != 0
      piv = r;
    }
    swap_index(i, piv);
    const residue inv_d = f.inv(at(i, i));
    for (std::size_t r = i + 1; r < k; ++r) {
      const residue factor = f.mul(at(r, i), inv_d);
      if (factor == 0) continue;
      for (std::size_t j = i; j < k; ++j) at(r, j) = f.sub(at(r, j), f.mul(factor, at(i, j)));
      for (std::size_t j = i; j < k; ++j) at(j, r) = f.sub(at(j, r), f.mul(factor, at(j, i)));
    }
  }
}

/// (rank, discriminant class) of a symmetric k x k buffer, destroying it.
inline std::pair<std::size_t, DiscClass> classify_gram_inplace(const FieldCtx& f,
                                                               std::span<residue> g,
                                                               std::size_t k) {
  diagonalize_inplace(f, g, k);
  std::size_t r = 0;
  SquareClass disc = SquareClass::Square;
  for (std::size_t i = 0; i < k; ++i) {
    const residue d = g[i * k + i];
    if (d == 0) continue;
    ++r;
    disc = disc * f.square_class(d);
  }
  if (r == 0) return {0, DiscClass::None};
  return {r, disc == SquareClass::Square ? DiscClass::Square : DiscClass::Nonsquare};
}

}  // namespace detail

inline void require_symmetric(const FqMatrix& g) {
  if (g.rows() != g.cols()) throw std::invalid_argument("Gram matrix must be square");
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = i + 1; j < g.cols(); ++j)
      if (g(i, j) != g(j, i)) throw std::invalid_argument("Gram matrix must be symmetric");
}

/// Diagonal of a matrix congruent to G.
inline std::vector<residue> diagonalize_symmetric(const FqMatrix& g) {
  require_symmetric(g);
  FqMatrix work = g;
  detail::diagonalize_inplace(g.ctx(), work.data(), g.rows());
  std::vector<residue> d(g.rows());
  for (std::size_t i = 0; i < g.rows(); ++i) d[i] = work(i, i);
  return d;
}

/// Isometry type of a symmetric Gram matrix.
inline IsoType classify_gram(const FqMatrix& g) {
  require_symmetric(g);
  FqMatrix work = g;
  const auto [r, disc] = detail::classify_gram_inplace(g.ctx(), work.data(), g.rows());
  return {g.rows(), r, disc};
}

/// Isometry type of span(basis); rows must be independent.
inline IsoType isometry_type(const FqMatrix& basis) { return classify_gram(gram(basis)); }

inline bool is_dot(const FqMatrix& basis) { return isometry_type(basis).is_dot(); }

}  // namespace dotinc

#endif  // DOTINC_QUADFORM_HPP
