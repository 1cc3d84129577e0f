#ifndef DOTINC_FIELD_HPP
#define DOTINC_FIELD_HPP

// Arithmetic in F_p for odd primes p and dense linear algebra over F_p.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dotinc {

using residue = std::uint32_t;

enum class SquareClass : std::uint8_t { Zero, Square, Nonsquare };

inline const char* to_string(SquareClass c) {
  switch (c) {
    case SquareClass::Zero: return "zero";
    case SquareClass::Square: return "square";
    case SquareClass::Nonsquare: return "nonsquare";
  }
  return "?";
}

/// Group law on F_p^* / (F_p^*)^2. Zero absorbs.
inline SquareClass operator*(SquareClass a, SquareClass b) {
  if (a == SquareClass::Zero || b == SquareClass::Zero) return SquareClass::Zero;
  return a == b ? SquareClass::Square : SquareClass::Nonsquare;
}

class FieldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2)
    if (n % d == 0) return false;
  return true;
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
  std::uint64_t result = 1 % mod;
  base %= mod;
  while (exp > 0) {
    if (exp & 1) result = result * base % mod;
    base = base * base % mod;
    exp >>= 1;
  }
  return result;
}

inline void require_odd_prime(std::uint64_t p) {
  if (p == 2) throw FieldError("characteristic 2 is not supported; q must be an odd prime");
  if (!is_prime(p)) {
    // Detect odd prime powers to give a more useful message.
    for (std::uint64_t d = 3; d * d <= p; d += 2) {
      if (p % d == 0) {
        std::uint64_t m = p;
        while (m % d == 0) m /= d;
        if (m == 1)
          throw FieldError("q = " + std::to_string(p) +
                           " is a prime power; only odd prime fields are supported");
        break;
      }
    }
    throw FieldError("q = " + std::to_string(p) + " is not an odd prime");
  }
  if (p >= (1u << 16)) throw FieldError("q must be below 65536");
}

/// Smallest positive quadratic nonresidue mod p.
inline residue canonical_nonsquare(std::uint64_t p) {
  require_odd_prime(p);
  for (std::uint64_t x = 2; x < p; ++x)
    if (pow_mod(x, (p - 1) / 2, p) == p - 1) return static_cast<residue>(x);
  throw FieldError("no nonsquare found");  // unreachable for odd primes
}

/// Immutable context for F_p: modulus, fixed nonsquare, residue table.
class FieldCtx {
 public:
  explicit FieldCtx(std::uint64_t p) : p_(static_cast<residue>(p)) {
    require_odd_prime(p);
    lambda_ = canonical_nonsquare(p);
    classes_.assign(p_, SquareClass::Nonsquare);
    classes_[0] = SquareClass::Zero;
    for (residue y = 1; y < p_; ++y) classes_[mul(y, y)] = SquareClass::Square;
  }

  residue p() const noexcept { return p_; }
  residue nonsquare() const noexcept { return lambda_; }

  SquareClass square_class(residue x) const { return classes_.at(x); }

  residue reduce(std::int64_t x) const noexcept {
    std::int64_t r = x % static_cast<std::int64_t>(p_);
    return static_cast<residue>(r < 0 ? r + p_ : r);
  }
  residue add(residue a, residue b) const noexcept {
    residue s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  residue sub(residue a, residue b) const noexcept { return a >= b ? a - b : a + p_ - b; }
  residue neg(residue a) const noexcept { return a == 0 ? 0 : p_ - a; }
  residue mul(residue a, residue b) const noexcept {
    return static_cast<residue>(static_cast<std::uint64_t>(a) * b % p_);
  }
  residue pow(residue a, std::uint64_t e) const noexcept {
    return static_cast<residue>(pow_mod(a, e, p_));
  }
  residue inv(residue a) const {
    if (a == 0) throw std::domain_error("inverse of zero");
    return pow(a, p_ - 2);
  }

  bool operator==(const FieldCtx& o) const noexcept { return p_ == o.p_; }

 private:
  residue p_;
  residue lambda_ = 0;
  std::vector<SquareClass> classes_;
};

/// Dense row-major matrix over F_p. Entries are kept reduced.
class FqMatrix {
 public:
  FqMatrix(const FieldCtx& ctx, std::size_t rows, std::size_t cols)
      : ctx_(&ctx), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  FqMatrix(const FieldCtx& ctx, std::size_t rows, std::size_t cols, std::vector<std::int64_t> entries)
      : ctx_(&ctx), rows_(rows), cols_(cols), data_(rows * cols) {
    if (entries.size() != rows * cols) throw std::invalid_argument("FqMatrix: entry count mismatch");
    for (std::size_t i = 0; i < entries.size(); ++i) data_[i] = ctx.reduce(entries[i]);
  }

  static FqMatrix identity(const FieldCtx& ctx, std::size_t n) {
    FqMatrix m(ctx, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  const FieldCtx& ctx() const noexcept { return *ctx_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  residue& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  residue operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<residue> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const residue> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<residue> data() noexcept { return data_; }
  std::span<const residue> data() const noexcept { return data_; }

  /// Keeps the first `n` rows.
  void truncate_rows(std::size_t n) {
    rows_ = std::min(rows_, n);
    data_.resize(rows_ * cols_);
  }

  bool operator==(const FqMatrix& o) const {
    return ctx_->p() == o.ctx_->p() && rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  const FieldCtx* ctx_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<residue> data_;
};

namespace detail {

/// Reduced row-echelon form in place on a rows x cols row-major buffer.
/// Pivot = first nonzero entry in the lowest-index column, normalized to 1.
/// Nonzero rows end up first; returns rank. Pivot columns are written to
/// `pivots` when it is non-null.
inline std::size_t rref_inplace(const FieldCtx& f, std::span<residue> a, std::size_t rows,
                                std::size_t cols, std::vector<std::size_t>* pivots = nullptr) {
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t piv = rank;
    while (piv < rows && a[piv * cols + c] == 0) ++piv;
    if (piv == rows) continue;
    if (piv != rank)
      for (std::size_t j = c; j < cols; ++j) std::swap(a[piv * cols + j], a[rank * cols + j]);
    residue* prow = a.data() + rank * cols;
    if (prow[c] != 1) {
      const residue s = f.inv(prow[c]);
      for (std::size_t j = c; j < cols; ++j) prow[j] = f.mul(prow[j], s);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == rank) continue;
      residue* row = a.data() + r * cols;
      const residue factor = row[c];
      if (factor == 0) continue;
      for (std::size_t j = c; j < cols; ++j) row[j] = f.sub(row[j], f.mul(factor, prow[j]));
    }
    if (pivots) pivots->push_back(c);
    ++rank;
  }
  return rank;
}

}  // namespace detail

struct RrefResult {
  FqMatrix matrix;
  std::size_t rank;
  std::vector<std::size_t> pivots;
};

/// Unique reduced row-echelon form with zero rows removed.
inline RrefResult rref(const FqMatrix& m) {
  FqMatrix out = m;
  std::vector<std::size_t> pivots;
  const std::size_t r = detail::rref_inplace(m.ctx(), out.data(), m.rows(), m.cols(), &pivots);
  out.truncate_rows(r);
  return {std::move(out), r, std::move(pivots)};
}

inline std::size_t rank(const FqMatrix& m) {
  FqMatrix tmp = m;
  return detail::rref_inplace(m.ctx(), tmp.data(), m.rows(), m.cols());
}

/// Basis (in RREF) of the right null space {x : m x = 0}.
inline FqMatrix kernel(const FqMatrix& m) {
  const FieldCtx& f = m.ctx();
  const auto [red, r, pivots] = rref(m);
  const std::size_t n = m.cols();
  std::vector<bool> is_pivot(n, false);
  for (auto c : pivots) is_pivot[c] = true;

  FqMatrix basis(f, n - r, n);
  std::size_t out = 0;
  for (std::size_t free = 0; free < n; ++free) {
    if (is_pivot[free]) continue;
    basis(out, free) = 1;
    for (std::size_t i = 0; i < r; ++i) basis(out, pivots[i]) = f.neg(red(i, free));
    ++out;
  }
  return rref(basis).matrix;
}

inline FqMatrix transpose(const FqMatrix& m) {
  FqMatrix t(m.ctx(), m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

inline FqMatrix multiply(const FqMatrix& a, const FqMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  const FieldCtx& f = a.ctx();
  FqMatrix c(f, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      std::uint64_t acc = 0;
      for (std::size_t l = 0; l < a.cols(); ++l)
        acc = (acc + static_cast<std::uint64_t>(a(i, l)) * b(l, j)) % f.p();
      c(i, j) = static_cast<residue>(acc);
    }
  return c;
}

/// Rows of `top` followed by rows of `bottom`.
inline FqMatrix stack(const FqMatrix& top, const FqMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw std::invalid_argument("stack: column mismatch");
  FqMatrix s(top.ctx(), top.rows() + bottom.rows(), top.cols());
  std::copy(top.data().begin(), top.data().end(), s.data().begin());
  std::copy(bottom.data().begin(), bottom.data().end(), s.data().begin() + top.data().size());
  return s;
}

inline bool in_row_space(std::span<const residue> v, const FqMatrix& m) {
  if (v.size() != m.cols()) throw std::invalid_argument("in_row_space: dimension mismatch");
  FqMatrix ext(m.ctx(), m.rows() + 1, m.cols());
  std::copy(m.data().begin(), m.data().end(), ext.data().begin());
  for (std::size_t j = 0; j < v.size(); ++j) ext(m.rows(), j) = m.ctx().reduce(v[j]);
  return rank(ext) == rank(m);
}

}  // namespace dotinc

#endif  // DOTINC_FIELD_HPP
