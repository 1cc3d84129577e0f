#ifndef DOTINC_SPECTRAL_HPP
#define DOTINC_SPECTRAL_HPP

// Spectrum of the bipartite adjacency matrix A(G) = [[0, N], [N^T, 0]].
//
// The nonzero eigenvalues of A(G) are ±sqrt(mu) for the nonzero eigenvalues
// mu of N N^T (equivalently N^T N). For a biregular graph the top one is
// sqrt(ab) with the all-ones vector on the Gram side, so lambda_3 is the
// square root of the largest Gram eigenvalue orthogonal to all-ones.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dotinc/incidence.hpp"

namespace dotinc {

/// Dense symmetric matrix of doubles, row-major.
class DenseSymmetric {
 public:
  DenseSymmetric() = default;
  explicit DenseSymmetric(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const double* r = a_.data() + i * n_;
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += r[j] * x[j];
      y[i] = s;
    }
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

enum class GramSide { Auto, A, B };

inline constexpr std::size_t kGramSideGuard = 6000;

/// Exact Gram matrix N N^T (side A) or N^T N (side B), stored as doubles.
/// Entries are integers below 2^53, so the conversion is exact.
inline DenseSymmetric gram_matrix(const IncidenceGraph& g, GramSide side) {
  const BitMatrix& rows = side == GramSide::B ? g.biadjacency_t() : g.biadjacency();
  const std::size_t m = rows.rows();
  if (m > kGramSideGuard)
    throw SizeGuardError("parameters exceed desk scale: Gram side of size " + std::to_string(m) +
                         " exceeds the dense guard of " + std::to_string(kGramSideGuard));
  DenseSymmetric out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      out(i, j) = out(j, i) = static_cast<double>(BitMatrix::and_count(rows.row(i), rows.row(j)));
  return out;
}

struct PowerIterationOptions {
  double tolerance = 1e-12;          // relative eigenvalue change between iterations
  std::size_t max_iterations = 100'000;
};

struct PowerIterationResult {
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  // ||M v - eigenvalue v|| for the final unit vector
  bool converged = false;
};

/// Largest eigenvalue of a positive semidefinite M restricted to the
/// orthogonal complement of the all-ones vector. M must have constant row
/// sums, so that complement is invariant.
inline PowerIterationResult power_iteration_deflated(const DenseSymmetric& m,
                                                     const PowerIterationOptions& opt = {}) {
  const std::size_t n = m.size();
  PowerIterationResult res;
  if (n < 2) {
    res.converged = true;
    return res;
  }
  auto project = [](std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
  };
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };

  // Alternating ±1, orthogonal to all-ones (index 0 zeroed for odd sizes).
  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  if (n % 2 == 1) v[0] = 0.0;
  project(v);
  double nv = norm(v);
  for (double& x : v) x /= nv;

  double prev = 0.0;
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    m.multiply(v, w);
    project(w);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) rayleigh += v[i] * w[i];
    const double nw = norm(w);
    res.iterations = it;
    if (nw <= 1e-300) {
      res.eigenvalue = 0.0;
      res.converged = true;
      break;
    }
    res.eigenvalue = rayleigh;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 1 && std::abs(rayleigh - prev) <= opt.tolerance * std::abs(rayleigh)) {
      res.converged = true;
      break;
    }
    prev = rayleigh;
  }
  m.multiply(v, w);
  project(w);
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) r += (w[i] - res.eigenvalue * v[i]) * (w[i] - res.eigenvalue * v[i]);
  res.residual = std::sqrt(r);
  return res;
}

/// All eigenvalues, ascending (dense symmetric solver).
inline std::vector<double> dense_spectrum(const DenseSymmetric& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

struct EigenBound {
  double bound = 0.0;                // sqrt(k/2) q^{E/2}
  long long summand_exponent = 0;    // E = -2k^2+2hk+4k-kn-h+hn-h^2-2
  double identity_summand = 0.0;     // q^{(h-k)(n-h)}/2
  double offdiagonal_summand = 0.0;  // (k/4) q^E
  double summand_ratio = 0.0;        // identity / offdiagonal
  bool hypotheses_hold = false;      // k > 1 and h >= 4k-4
  std::vector<std::string> warnings;
};

/// Exponent of q^{(h-t)(n-h)} q^{(t-k)(n+2k-2t)} as a polynomial in t.
inline long long et_summand_exponent(long long n, long long k, long long h, long long t) {
  return -2 * t * t + (4 * k + h) * t + h * n - h * h - k * n - 2 * k * k;
}

inline EigenBound third_eigenvalue_bound(std::uint64_t q, std::size_t n, std::size_t k, std::size_t h) {
  const long long N = static_cast<long long>(n), K = static_cast<long long>(k), H = static_cast<long long>(h);
  const double Q = static_cast<double>(q);
  EigenBound b;
  b.summand_exponent = -2 * K * K + 2 * H * K + 4 * K - K * N - H + H * N - H * H - 2;
  b.bound = std::sqrt(static_cast<double>(K) / 2.0) * std::pow(Q, static_cast<double>(b.summand_exponent) / 2.0);
  b.identity_summand = std::pow(Q, static_cast<double>((H - K) * (N - H))) / 2.0;
  b.offdiagonal_summand = static_cast<double>(K) / 4.0 * std::pow(Q, static_cast<double>(b.summand_exponent));
  b.summand_ratio = b.identity_summand / b.offdiagonal_summand;
  if (K <= 1) b.warnings.push_back("k > 1 does not hold");
  if (H < 4 * K - 4) b.warnings.push_back("h >= 4k-4 does not hold");
  b.hypotheses_hold = b.warnings.empty();
  return b;
}

struct SpectralReport {
  std::uint64_t left_degree = 0;
  std::uint64_t right_degree = 0;
  double lambda1 = 0.0;  // sqrt(a * b_right)
  double lambda3 = 0.0;
  double lambda3_squared = 0.0;
  EigenBound bound;
  double ratio = 0.0;  // lambda3 / bound
  char side = 'A';     // Gram side used
  std::size_t side_size = 0;
  PowerIterationResult solver;
};

/// lambda_1 and lambda_3 from the smaller Gram side by deflated power
/// iteration. Throws StructureError unless Gram row sums are constant.
inline SpectralReport gram_side_eigen(const IncidenceGraph& g, GramSide side = GramSide::Auto,
                                      const PowerIterationOptions& opt = {}) {
  const DegreeCheck deg = degree_check(g);
  if (side == GramSide::Auto) side = g.size_b() < g.size_a() ? GramSide::B : GramSide::A;
  const DenseSymmetric gram = gram_matrix(g, side);

  // Row sums must be exactly a * b_right (integers in doubles, exact).
  const double expected = static_cast<double>(deg.left_degree) * static_cast<double>(deg.right_degree);
  for (std::size_t i = 0; i < gram.size(); ++i) {
    double s = 0.0;
    for (double x : gram.row(i)) s += x;
    if (s != expected)
      throw StructureError("Gram row sums are not constant (row " + std::to_string(i) + ")");
  }

  SpectralReport rep;
  rep.left_degree = deg.left_degree;
  rep.right_degree = deg.right_degree;
  rep.lambda1 = std::sqrt(expected);
  rep.side = side == GramSide::B ? 'B' : 'A';
  rep.side_size = gram.size();
  rep.solver = power_iteration_deflated(gram, opt);
  if (!rep.solver.converged)
    throw std::runtime_error("power iteration did not converge after " + std::to_string(rep.solver.iterations) +
                             " iterations");
  rep.lambda3_squared = std::max(rep.solver.eigenvalue, 0.0);
  rep.lambda3 = std::sqrt(rep.lambda3_squared);
  const auto& p = g.params();
  if (p.q != 0) {
    rep.bound = third_eigenvalue_bound(p.q, p.n, p.k, p.h);
    rep.ratio = rep.lambda3 / rep.bound.bound;
  }
  return rep;
}

/// max_i |(A(G) x)_i - sqrt(ab) x_i| / (sqrt(ab) max|x|) for
/// x = sqrt(a) 1_A + sqrt(b) 1_B.
inline double top_eigenvector_residual(const IncidenceGraph& g) {
  const auto& n = g.biadjacency();
  const auto& nt = g.biadjacency_t();
  const DegreeCheck d = degree_check(g);
  const double sa = std::sqrt(static_cast<double>(d.left_degree));
  const double sb = std::sqrt(static_cast<double>(d.right_degree));
  const double lam = std::sqrt(static_cast<double>(d.left_degree) * static_cast<double>(d.right_degree));
  double worst = 0.0;
  // (A x)_i for i in A: sum over neighbours in B of sqrt(b)
  for (std::size_t i = 0; i < g.size_a(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(n.row_count(i)) * sb - lam * sa));
  for (std::size_t j = 0; j < g.size_b(); ++j)
    worst = std::max(worst, std::abs(static_cast<double>(nt.row_count(j)) * sa - lam * sb));
  return worst / (lam * std::max(sa, sb));
}

struct MixingCheck {
  std::size_t size_x = 0;
  std::size_t size_y = 0;
  std::uint64_t incidences = 0;
  double main_term = 0.0;  // a |X| |Y| / |B|
  double error = 0.0;      // |I - main_term|
  double rhs = 0.0;        // lambda3 sqrt(|X||Y|)
  bool holds = false;      // error <= rhs (1 + 1e-6)
};

inline constexpr double kFpSlack = 1e-6;

namespace detail {

inline std::uint64_t count_incidences(const IncidenceGraph& g, std::span<const std::size_t> xs,
                                      std::span<const std::size_t> ys) {
  const std::size_t words = g.biadjacency().words_per_row();
  std::vector<std::uint64_t> mask(words, 0);
  for (auto y : ys) {
    if (y >= g.size_b()) throw std::out_of_range("index outside part B");
    mask[y / 64] |= std::uint64_t{1} << (y % 64);
  }
  std::uint64_t total = 0;
  for (auto x : xs) {
    if (x >= g.size_a()) throw std::out_of_range("index outside part A");
    total += BitMatrix::and_count(g.biadjacency().row(x), mask);
  }
  return total;
}

/// |I - num/den| computed from the exact integer numerator.
inline double deviation(std::uint64_t incidences, unsigned __int128 num, unsigned __int128 den) {
  const unsigned __int128 lhs = static_cast<unsigned __int128>(incidences) * den;
  const unsigned __int128 diff = lhs > num ? lhs - num : num - lhs;
  return static_cast<double>(diff) / static_cast<double>(den);
}

}  // namespace detail

/// |I(X,Y) - (a/|B|)|X||Y|| against lambda3 sqrt(|X||Y|). Index sets must be
/// duplicate-free.
inline MixingCheck mixing_check(const IncidenceGraph& g, std::span<const std::size_t> xs,
                                std::span<const std::size_t> ys, double lambda3) {
  MixingCheck m;
  m.size_x = xs.size();
  m.size_y = ys.size();
  m.incidences = detail::count_incidences(g, xs, ys);
  const std::uint64_t a = g.size_a() ? g.biadjacency().row_count(0) : 0;
  const unsigned __int128 num = static_cast<unsigned __int128>(a) * xs.size() * ys.size();
  m.main_term = static_cast<double>(num) / static_cast<double>(g.size_b());
  m.error = detail::deviation(m.incidences, num, g.size_b());
  m.rhs = lambda3 * std::sqrt(static_cast<double>(xs.size()) * static_cast<double>(ys.size()));
  m.holds = m.error <= m.rhs * (1.0 + kFpSlack);
  return m;
}

struct MainTheoremCheck {
  std::size_t size_k = 0;
  std::size_t size_h = 0;
  std::uint64_t incidences = 0;
  double main_term = 0.0;        // |K||H| / q^{k(n-h)}
  double deviation = 0.0;        // |I - main_term|
  double exact_main_term = 0.0;  // a |K||H| / |B|
  double exact_deviation = 0.0;  // |I - exact_main_term|
  double certificate = 0.0;      // lambda3 sqrt(|K||H|)
  double power_bound = 0.0;      // q^{exponent} sqrt(|K||H|)
  bool exact_within_certificate = false;
  bool within_certificate = false;
  double certificate_ratio = 0.0;  // deviation / certificate
  double power_ratio = 0.0;        // deviation / power_bound
  double density_log_q = 0.0;      // log_q(a / |B|)
  // Nonemptiness threshold q^{k(2h-n-2k+4)+h(n-h-1)-2} q^{2k(n-h)}.
  double threshold = 0.0;
  double product = 0.0;  // |K||H|
  bool above_threshold = false;
  bool nonempty = false;
};

inline MainTheoremCheck main_theorem_check(const IncidenceGraph& g, std::span<const std::size_t> ks,
                                           std::span<const std::size_t> hs, double lambda3) {
  const auto& p = g.params();
  if (p.q == 0) throw std::invalid_argument("main_theorem_check needs graph parameters");
  const ErrorExponent e = formula_error_exponent(p.q, p.n, p.k, p.h);
  const double Q = static_cast<double>(p.q);
  const double sqrt_kh = std::sqrt(static_cast<double>(ks.size()) * static_cast<double>(hs.size()));

  MainTheoremCheck c;
  c.size_k = ks.size();
  c.size_h = hs.size();
  c.incidences = detail::count_incidences(g, ks, hs);
  c.product = static_cast<double>(ks.size()) * static_cast<double>(hs.size());

  unsigned __int128 qpow = 1;
  for (long long i = 0; i < e.main_term_exponent; ++i) qpow *= p.q;
  const unsigned __int128 kh = static_cast<unsigned __int128>(ks.size()) * hs.size();
  c.main_term = static_cast<double>(kh) / static_cast<double>(qpow);
  c.deviation = detail::deviation(c.incidences, kh, qpow);

  const std::uint64_t a = g.biadjacency().row_count(0);
  c.exact_main_term = static_cast<double>(kh * a) / static_cast<double>(g.size_b());
  c.exact_deviation = detail::deviation(c.incidences, kh * a, g.size_b());

  c.certificate = lambda3 * sqrt_kh;
  c.power_bound = e.value * sqrt_kh;
  c.exact_within_certificate = c.exact_deviation <= c.certificate * (1.0 + kFpSlack);
  c.within_certificate = c.deviation <= c.certificate * (1.0 + kFpSlack);
  c.certificate_ratio = c.certificate > 0 ? c.deviation / c.certificate : 0.0;
  c.power_ratio = c.power_bound > 0 ? c.deviation / c.power_bound : 0.0;
  c.density_log_q = std::log(static_cast<double>(a) / static_cast<double>(g.size_b())) / std::log(Q);
  c.threshold = std::pow(Q, static_cast<double>(e.twice_exponent + 2 * e.main_term_exponent));
  c.above_threshold = c.product >= c.threshold;
  c.nonempty = c.incidences > 0;
  return c;
}

}  // namespace dotinc

#endif  // DOTINC_SPECTRAL_HPP
