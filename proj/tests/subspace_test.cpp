#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "dotinc/subspace.hpp"

using namespace dotinc;

namespace {

// q-Pascal recurrence; independent of the product formula in the library.
std::uint64_t q_pascal(std::uint64_t q, std::size_t n, std::size_t k) {
  if (k == 0 || k == n) return 1;
  if (k > n) return 0;
  std::uint64_t qk = 1;
  for (std::size_t i = 0; i < k; ++i) qk *= q;
  return q_pascal(q, n - 1, k - 1) + qk * q_pascal(q, n - 1, k);
}

// Number of ordered k-tuples of pairwise orthogonal unit vectors in F_q^n.
std::uint64_t orthonormal_frames(std::uint64_t q, std::size_t n, std::size_t k) {
  std::vector<std::vector<std::uint64_t>> units;
  std::vector<std::uint64_t> v(n, 0);
  while (true) {
    std::uint64_t norm = 0;
    for (auto x : v) norm += x * x;
    if (norm % q == 1) units.push_back(v);
    std::size_t i = 0;
    while (i < n && ++v[i] == q) v[i++] = 0;
    if (i == n) break;
  }
  auto orth = [&](std::size_t a, std::size_t b) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += units[a][i] * units[b][i];
    return s % q == 0;
  };
  std::vector<std::size_t> chosen;
  std::uint64_t count = 0;
  auto rec = [&](auto&& self) -> void {
    if (chosen.size() == k) {
      ++count;
      return;
    }
    for (std::size_t u = 0; u < units.size(); ++u) {
      bool ok = true;
      for (auto c : chosen) ok = ok && orth(c, u);
      if (!ok) continue;
      chosen.push_back(u);
      self(self);
      chosen.pop_back();
    }
  };
  rec(rec);
  return count;
}

Subspace span(const FieldCtx& f, std::size_t n, std::vector<std::vector<std::int64_t>> rows) {
  std::vector<std::int64_t> flat;
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return Subspace::span_of(FqMatrix(f, rows.size(), n, flat));
}

}  // namespace

TEST(GaussianBinomial, MatchesQPascal) {
  for (std::uint64_t q : {3u, 5u, 7u, 11u})
    for (std::size_t n = 0; n <= 8; ++n)
      for (std::size_t k = 0; k <= n; ++k) EXPECT_EQ(gaussian_binomial(q, n, k), q_pascal(q, n, k));
  EXPECT_EQ(gaussian_binomial(3, 2, 1), 4u);
  EXPECT_EQ(gaussian_binomial(3, 3, 2), 13u);
  EXPECT_EQ(gaussian_binomial(3, 2, 3), 0u);
}

TEST(Enumerate, Examples) {
  FieldCtx f3(3);
  EXPECT_EQ(enumerate_subspaces(f3, 2, 1).size(), 4u);
  EXPECT_EQ(enumerate_subspaces(f3, 3, 2).size(), 13u);
  auto zero = enumerate_subspaces(f3, 4, 0);
  ASSERT_EQ(zero.size(), 1u);
  EXPECT_EQ(zero[0].dim(), 0u);
  EXPECT_THROW(enumerate_subspaces(f3, 2, 3), std::invalid_argument);
}

TEST(Enumerate, CountsUniqueCanonical) {
  for (std::uint64_t q : {3u, 5u, 7u}) {
    FieldCtx f(q);
    for (std::size_t n = 0; n <= 5; ++n)
      for (std::size_t k = 0; k <= n; ++k) {
        std::uint64_t count = 0;
        for_each_subspace(f, n, k, [&](std::span<const residue>) { ++count; });
        EXPECT_EQ(count, q_pascal(q, n, k)) << q << ' ' << n << ' ' << k;
      }
  }
  // Distinctness and RREF canonicity on a mid-sized case.
  FieldCtx f3(3);
  auto all = enumerate_subspaces(f3, 5, 2);
  std::set<std::vector<residue>> seen;
  for (const auto& s : all) {
    EXPECT_EQ(rref(s.basis()).matrix, s.basis());
    EXPECT_EQ(s.dim(), 2u);
    seen.insert({s.basis().data().begin(), s.basis().data().end()});
  }
  EXPECT_EQ(seen.size(), all.size());
}

TEST(Enumerate, DeterministicOrder) {
  FieldCtx f3(3);
  auto lines = enumerate_subspaces(f3, 2, 1);
  // pivot {0}: (1,0),(1,1),(1,2); pivot {1}: (0,1)
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].basis(), FqMatrix(f3, 1, 2, {1, 0}));
  EXPECT_EQ(lines[1].basis(), FqMatrix(f3, 1, 2, {1, 1}));
  EXPECT_EQ(lines[2].basis(), FqMatrix(f3, 1, 2, {1, 2}));
  EXPECT_EQ(lines[3].basis(), FqMatrix(f3, 1, 2, {0, 1}));
}

TEST(Enumerate, SizeGuard) {
  FieldCtx f7(7);
  EXPECT_THROW(for_each_subspace(f7, 10, 5, [](auto) {}), SizeGuardError);
}

TEST(Census, SmallExamples) {
  FieldCtx f3(3);
  auto c = census(f3, 2, 1);
  EXPECT_EQ(c.count(IsoType::dot(1)), 2u);
  EXPECT_EQ(c.count(IsoType::lambda_dot(1)), 2u);
  EXPECT_EQ(c.total(), 4u);
  for (std::uint64_t q : {3u, 5u, 7u}) {
    FieldCtx f(q);
    for (std::size_t n = 1; n <= 4; ++n) {
      auto full = census(f, n, n);
      EXPECT_EQ(full.count(IsoType::dot(n)), 1u);
      EXPECT_EQ(full.total(), 1u);
    }
  }
}

TEST(Census, SumsToGaussianBinomial) {
  for (std::uint64_t q : {3u, 5u}) {
    FieldCtx f(q);
    for (std::size_t n = 1; n <= 5; ++n)
      for (std::size_t k = 0; k <= n; ++k) EXPECT_EQ(census(f, n, k).total(), q_pascal(q, n, k));
  }
}

TEST(Census, DotCountMatchesFrameOracle) {
  // Each dot_k-subspace carries exactly frames(q,k,k) orthonormal bases.
  struct Case {
    std::uint64_t q;
    std::size_t n, k;
  };
  for (auto [q, n, k] : {Case{3, 3, 1}, Case{3, 4, 2}, Case{3, 5, 2}, Case{5, 3, 1}, Case{5, 3, 2},
                         Case{5, 4, 2}, Case{7, 3, 2}, Case{3, 4, 3}}) {
    FieldCtx f(q);
    const std::uint64_t expected = orthonormal_frames(q, n, k) / orthonormal_frames(q, k, k);
    EXPECT_EQ(census(f, n, k).count(IsoType::dot(k)), expected) << q << ' ' << n << ' ' << k;
    EXPECT_EQ(dot_subspaces(f, n, k).size(), expected);
  }
}

TEST(Census, RatioConvergesInQ) {
  for (auto [n, k] : {std::pair<std::size_t, std::size_t>{4, 1}, {4, 2}, {5, 2}}) {
    auto deviation = [&](std::uint64_t q) {
      FieldCtx f(q);
      const double exact = static_cast<double>(census(f, n, k).count(IsoType::dot(k)));
      return std::abs(exact / census_formula(q, n, k) - 1.0);
    };
    EXPECT_LT(deviation(7), deviation(3)) << n << ' ' << k;
  }
}

TEST(Census, DotLambdaDotSymmetryReported) {
  for (std::uint64_t q : {3u, 5u, 7u}) {
    FieldCtx f(q);
    for (auto [n, k] : {std::pair<std::size_t, std::size_t>{4, 1}, {4, 2}, {5, 2}}) {
      auto c = census(f, n, k);
      const double diff = std::abs(static_cast<double>(c.count(IsoType::dot(k))) -
                                   static_cast<double>(c.count(IsoType::lambda_dot(k))));
      const double scale = std::pow(static_cast<double>(q), static_cast<double>(k * (n - k) - 1));
      RecordProperty("dot_minus_ldot_q" + std::to_string(q) + "_n" + std::to_string(n) + "_k" +
                         std::to_string(k),
                     format_double(diff / scale));
    }
  }
}

TEST(Census, CsvExport) {
  FieldCtx f3(3);
  std::vector<TypeCensus> rows{census(f3, 2, 1)};
  const std::string csv = census_csv(rows);
  EXPECT_EQ(csv,
            "q,n,k,rank,disc_class,exact_count,formula_value,ratio\n"
            "3,2,1,1,square,2,1.5,1.3333333333333333\n"
            "3,2,1,1,nonsquare,2,1.5,1.3333333333333333\n");
  const std::string deg = census_csv(std::vector<TypeCensus>{census(f3, 4, 1)});
  EXPECT_NE(deg.find("3,4,1,0,none,"), std::string::npos);
  EXPECT_NE(deg.find(",none,16,,\n"), std::string::npos);
}

TEST(SubspaceSum, Examples) {
  FieldCtx f3(3);
  auto e1 = span(f3, 2, {{1, 0}});
  auto e2 = span(f3, 2, {{0, 1}});
  auto d = span(f3, 2, {{1, 1}});
  EXPECT_EQ(subspace_sum(e1, e1), e1);
  EXPECT_EQ(subspace_sum(e1, e2), span(f3, 2, {{1, 0}, {0, 1}}));
  EXPECT_EQ(subspace_sum(e1, d).dim(), 2u);
  auto other = span(f3, 3, {{1, 0, 0}});
  EXPECT_THROW(subspace_sum(e1, other), std::invalid_argument);
}

TEST(SubspaceSum, LatticeProperties) {
  std::mt19937_64 rng(5);
  FieldCtx f5(5);
  auto planes = enumerate_subspaces(f5, 4, 2);
  auto lines = enumerate_subspaces(f5, 4, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto& a = planes[rng() % planes.size()];
    const auto& b = planes[rng() % planes.size()];
    const auto& c = lines[rng() % lines.size()];
    auto ab = subspace_sum(a, b);
    EXPECT_EQ(ab, subspace_sum(b, a));
    EXPECT_EQ(subspace_sum(ab, c), subspace_sum(a, subspace_sum(b, c)));
    EXPECT_EQ(subspace_sum(a, a), a);
    EXPECT_GE(ab.dim(), 2u);
    EXPECT_LE(ab.dim(), 4u);
    auto meet = intersection(a, b);
    EXPECT_EQ(ab.dim(), a.dim() + b.dim() - meet.dim());
    EXPECT_TRUE(contains(a, meet));
    EXPECT_TRUE(contains(b, meet));
    EXPECT_TRUE(contains(ab, a));
  }
}

TEST(Contains, Examples) {
  FieldCtx f3(3);
  auto h = span(f3, 3, {{1, 0, 0}, {0, 1, 0}});
  EXPECT_TRUE(contains(h, h));
  EXPECT_TRUE(contains(h, span(f3, 3, {{1, 0, 0}})));
  EXPECT_FALSE(contains(h, span(f3, 3, {{0, 0, 1}})));
  EXPECT_THROW(contains(h, span(f3, 2, {{1, 0}})), std::invalid_argument);
}
