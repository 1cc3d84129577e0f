#include <gtest/gtest.h>

#include <map>
#include <random>

#include "dotinc/incidence.hpp"

using namespace dotinc;

// Frozen values for (q,n,k,h) = (3,5,2,4) come from tests/oracle/brute_force.py,
// which builds subspaces as explicit vector sets and decides dot_k membership
// by searching for an orthonormal basis.

namespace {

const IncidenceGraph& graph_3524() {
  static const IncidenceGraph g = build_graph(3, 5, 2, 4);
  return g;
}

Subspace coordinate_span(const FieldCtx& f, std::size_t n, std::size_t k) {
  FqMatrix b(f, k, n);
  for (std::size_t i = 0; i < k; ++i) b(i, i) = 1;
  return Subspace::span_of(b);
}

// Slow path: materialize K + K' and classify its RREF basis.
PairClass slow_pair_class(const Subspace& a, const Subspace& b) {
  const Subspace s = subspace_sum(a, b);
  return {s.dim(), s.iso_type()};
}

}  // namespace

TEST(BuildGraph, SizesAndDegreesMatchBruteForce) {
  const auto& g = graph_3524();
  EXPECT_EQ(g.size_a(), 270u);
  EXPECT_EQ(g.size_b(), 45u);
  EXPECT_EQ(g.edges(), 810u);
  const auto d = degree_check(g);
  EXPECT_EQ(d.left_degree, 3u);
  EXPECT_EQ(d.right_degree, 18u);
  EXPECT_DOUBLE_EQ(d.formula_a, 4.5);
  EXPECT_DOUBLE_EQ(d.ratio, 3.0 / 4.5);
}

TEST(BuildGraph, LeftDegreeEqualsDirectCount) {
  const auto& g = graph_3524();
  const FieldCtx& f = *g.field();
  const Subspace k = coordinate_span(f, 5, 2);
  std::uint64_t direct = 0;
  for (const auto& h : dot_subspaces(f, 5, 4)) direct += contains(h, k);
  EXPECT_EQ(direct, degree_check(g).left_degree);
}

TEST(BuildGraph, FastContainmentAgreesWithRowSpaceTest) {
  const auto& g = graph_3524();
  for (std::size_t i = 0; i < g.size_a(); i += 7)
    for (std::size_t j = 0; j < g.size_b(); ++j)
      EXPECT_EQ(g.adjacent(i, j), contains(g.part_b()[j], g.part_a()[i])) << i << ' ' << j;
}

TEST(BuildGraph, RejectsBadParameters) {
  EXPECT_THROW(build_graph(3, 5, 4, 2), std::invalid_argument);
  EXPECT_THROW(build_graph(3, 5, 2, 2), std::invalid_argument);
  EXPECT_THROW(build_graph(3, 5, 2, 5), std::invalid_argument);
  EXPECT_THROW(build_graph(9, 5, 2, 4), FieldError);
}

TEST(DegreeCheck, FormulaValues) {
  EXPECT_DOUBLE_EQ(half_q_pow(3, (4 - 2) * (5 - 4)), 4.5);
  EXPECT_DOUBLE_EQ(half_q_pow(5, (4 - 2) * (5 - 4)), 12.5);
}

TEST(DegreeCheck, CompleteBipartiteToy) {
  BitMatrix all(4, 6);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j) all.set(i, j);
  const auto g = IncidenceGraph::from_biadjacency(all);
  const auto d = degree_check(g);
  EXPECT_EQ(d.left_degree, 6u);
  EXPECT_EQ(d.right_degree, 4u);
}

TEST(DegreeCheck, NonBiregularIsHardError) {
  BitMatrix m(3, 3);
  m.set(0, 0);
  m.set(1, 1);
  m.set(2, 2);
  m.set(2, 0);
  EXPECT_THROW(degree_check(IncidenceGraph::from_biadjacency(m)), StructureError);
}

TEST(PairClassifier, AgreesWithMaterializedSum) {
  const auto& g = graph_3524();
  const FieldCtx& f = *g.field();
  detail::PairClassifier cls(f, g.part_a(), 5, 2);
  for (std::size_t i = 0; i < g.size_a(); i += 13)
    for (std::size_t j = 0; j < g.size_a(); ++j) {
      const PairClass fast = detail::decode_code(2, cls.classify(i, j));
      EXPECT_EQ(fast, slow_pair_class(g.part_a()[i], g.part_a()[j])) << i << ' ' << j;
    }
  FieldCtx f5(5);
  auto part = dot_subspaces(f5, 5, 2);
  detail::PairClassifier cls5(f5, part, 5, 2);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t i = rng() % part.size(), j = rng() % part.size();
    EXPECT_EQ(detail::decode_code(2, cls5.classify(i, j)), slow_pair_class(part[i], part[j]));
  }
}

TEST(NntDecompose, StructureOn3524) {
  const auto& g = graph_3524();
  const auto rep = nnt_decompose(g);
  EXPECT_FALSE(rep.sampled);
  EXPECT_EQ(rep.rows_examined, 270u);
  EXPECT_EQ(rep.a, 3u);
  EXPECT_EQ(rep.row_sum, 54u);
  EXPECT_EQ(rep.trace, 3u * 270u);
  EXPECT_TRUE(rep.row_sum_is_a_times_right_degree());
  EXPECT_TRUE(rep.accounting_exact());

  // Brute-force row profile: per t, the multiset of N N^T values.
  std::map<std::pair<std::size_t, std::uint64_t>, std::uint64_t> by_t_value;
  for (const auto& c : rep.classes) {
    EXPECT_EQ(c.degree_min, c.degree_max) << c.cls.name();
    EXPECT_GE(c.cls.t, 3u);
    EXPECT_LE(c.cls.t, 4u);
    by_t_value[{c.cls.t, c.b}] += c.degree_min;
  }
  const std::map<std::pair<std::size_t, std::uint64_t>, std::uint64_t> expected{
      {{3, 0}, 32}, {{3, 1}, 12}, {{3, 2}, 6}, {{4, 0}, 192}, {{4, 1}, 27}};
  EXPECT_EQ(by_t_value, expected);
}

TEST(NntDecompose, FormulaValuesAndExactB) {
  const auto& g = graph_3524();
  const FieldCtx& f = *g.field();
  const auto rep = nnt_decompose(g);
  auto find = [&](std::size_t t, IsoType type) -> const ClassRecord& {
    for (const auto& c : rep.classes)
      if (c.cls.t == t && c.cls.sum_type == type) return c;
    throw std::runtime_error("class not found");
  };
  const auto& dot4 = find(4, IsoType::dot(4));
  ASSERT_TRUE(dot4.b_formula);
  EXPECT_DOUBLE_EQ(*dot4.b_formula, 0.5);
  EXPECT_EQ(dot4.b, 1u);  // the sum itself is the only dot_4 containing it

  const auto& dot3 = find(3, IsoType::dot(3));
  ASSERT_TRUE(dot3.b_formula);
  EXPECT_DOUBLE_EQ(*dot3.b_formula, 1.5);
  // Direct: dot_4-subspaces containing span{e1,e2,e3}.
  const Subspace w = coordinate_span(f, 5, 3);
  std::uint64_t direct = 0;
  for (const auto& h : dot_subspaces(f, 5, 4)) direct += contains(h, w);
  EXPECT_EQ(dot3.b, direct);

  // Degenerate sum types carry no formula.
  for (const auto& c : rep.classes)
    if (!c.cls.sum_type.nondegenerate()) {
      EXPECT_FALSE(c.b_formula);
    }
}

TEST(NntDecompose, SampledRowsAgreeWithFullScan) {
  const auto& g = graph_3524();
  const auto full = nnt_decompose(g);
  const auto part = nnt_decompose(g, ScanOptions{100, 9});
  EXPECT_TRUE(part.sampled);
  EXPECT_EQ(part.rows_examined, 9u);
  EXPECT_EQ(part.row_sum, full.row_sum);
  ASSERT_EQ(part.classes.size(), full.classes.size());
  for (std::size_t i = 0; i < full.classes.size(); ++i) {
    EXPECT_EQ(part.classes[i].cls, full.classes[i].cls);
    EXPECT_EQ(part.classes[i].b, full.classes[i].b);
    EXPECT_EQ(part.classes[i].degree_min, full.classes[i].degree_min);
  }
}

TEST(NntDecompose, TamperedGraphIsHardError) {
  const auto& g = graph_3524();
  BitMatrix bits = g.biadjacency();
  // Swap an edge pair between rows 0 and r: degrees stay put, constancy breaks.
  std::size_t on = 0, off = 0;
  while (!bits.test(0, on)) ++on;
  while (bits.test(0, off)) ++off;
  std::size_t r = 1;
  while (!(bits.test(r, off) && !bits.test(r, on))) ++r;
  bits.set(0, on, false);
  bits.set(0, off, true);
  bits.set(r, off, false);
  bits.set(r, on, true);
  const IncidenceGraph bad(g.params(), std::make_shared<const FieldCtx>(3), g.part_a(), g.part_b(), bits);
  EXPECT_NO_THROW(degree_check(bad));
  EXPECT_THROW(nnt_decompose(bad), StructureError);
}

TEST(EtProfile, ConstantDegreesAndFormula) {
  FieldCtx f3(3);
  const auto prof = et_degree_profile(f3, 5, 2);
  EXPECT_EQ(prof.vertices, 270u);
  EXPECT_TRUE(prof.constant_degrees());
  bool saw_t4 = false;
  for (const auto& c : prof.classes)
    if (c.cls.t == 4 && c.cls.sum_type.nondegenerate()) {
      ASSERT_TRUE(c.formula);
      EXPECT_DOUBLE_EQ(*c.formula, 4.5);
      saw_t4 = true;
    }
  EXPECT_TRUE(saw_t4);
}

TEST(EtProfile, T3DegreesMatchDirectClassification) {
  FieldCtx f3(3);
  const auto part = dot_subspaces(f3, 5, 2);
  std::map<IsoType, std::uint64_t> direct;
  for (std::size_t j = 1; j < part.size(); ++j) {
    const Subspace s = subspace_sum(part[0], part[j]);
    if (s.dim() == 3) ++direct[s.iso_type()];
  }
  const auto prof = et_degree_profile(f3, 5, 2);
  std::map<IsoType, std::uint64_t> profiled;
  for (const auto& c : prof.classes)
    if (c.cls.t == 3) profiled[c.cls.sum_type] = c.degree_max;
  EXPECT_EQ(profiled, direct);
  EXPECT_TRUE(prof.max_at_nondegenerate(4));
}

TEST(ErrorExponent, Examples) {
  const auto e = formula_error_exponent(3, 5, 2, 4);
  EXPECT_EQ(e.twice_exponent, 4);
  EXPECT_DOUBLE_EQ(e.exponent, 2.0);
  EXPECT_DOUBLE_EQ(e.value, 9.0);
  EXPECT_EQ(e.main_term_exponent, 2);
  EXPECT_TRUE(e.hypotheses_hold);

  const auto e6 = formula_error_exponent(3, 6, 2, 4);
  EXPECT_EQ(e6.twice_exponent, 6);
  EXPECT_DOUBLE_EQ(e6.value, 27.0);

  const auto bad = formula_error_exponent(3, 9, 3, 6);
  EXPECT_FALSE(bad.hypotheses_hold);
  EXPECT_EQ(bad.warnings.size(), 1u);
}
