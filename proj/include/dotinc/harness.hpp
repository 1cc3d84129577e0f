#ifndef DOTINC_HARNESS_HPP
#define DOTINC_HARNESS_HPP

// Experiment orchestration: config validation, the per-mode pipelines, verdict
// aggregation and JSON/CSV report emission.
//
// Reports are deterministic functions of the config. Wall-clock timings go to
// the optional log stream only, never into the report.

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dotinc/prng.hpp"
#include "dotinc/spectral.hpp"

namespace dotinc {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kDenseCrossCheckLimit = 400;
inline constexpr double kCrossCheckTolerance = 1e-8;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Mode { VerifyAll, Census, Graph, Spectral, Mixing, MainTheorem, EtProfile };

inline constexpr std::string_view kModeNames[] = {"verify-all", "census",       "graph",     "spectral",
                                                  "mixing",     "main-theorem", "et-profile"};

inline std::string_view to_string(Mode m) { return kModeNames[static_cast<int>(m)]; }

inline Mode parse_mode(std::string_view s) {
  for (int i = 0; i < 7; ++i)
    if (kModeNames[i] == s) return static_cast<Mode>(i);
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

inline bool needs_incidence(Mode m) { return m != Mode::Census && m != Mode::EtProfile; }

/// Subset size: unset (mode default), "full", or an explicit count.
struct SubsetSize {
  bool full = false;
  std::optional<std::size_t> count;

  static SubsetSize parse(std::string_view s) {
    if (s == "full") return {true, std::nullopt};
    std::size_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) throw ConfigError("subset size must be a count or 'full', got '" + std::string(s) + "'");
    return {false, v};
  }

  json to_json() const {
    if (full) return "full";
    if (count) return *count;
    return "default";
  }

  std::size_t resolve(std::size_t universe, std::size_t fallback, const char* what) const {
    if (full) return universe;
    if (!count) return fallback;
    if (*count > universe)
      throw ConfigError(std::string(what) + " = " + std::to_string(*count) + " exceeds part size " +
                        std::to_string(universe));
    return *count;
  }
};

struct ExperimentConfig {
  std::uint64_t q = 3;
  std::size_t n = 5;
  std::size_t k = 2;
  std::size_t h = 4;
  std::uint64_t seed = 42;
  std::size_t trials = 100;
  SubsetSize size_k;
  SubsetSize size_h;
  Mode mode = Mode::VerifyAll;
};

/// Throws ConfigError for anything the pipeline cannot run.
inline void validate(const ExperimentConfig& c) {
  try {
    require_odd_prime(c.q);
  } catch (const FieldError& e) {
    throw ConfigError(e.what());
  }
  if (needs_incidence(c.mode)) {
    if (!(1 < c.k && c.k < c.h && c.h < c.n))
      throw ConfigError("mode " + std::string(to_string(c.mode)) + " needs 1 < k < h < n (got k=" +
                        std::to_string(c.k) + ", h=" + std::to_string(c.h) + ", n=" + std::to_string(c.n) + ")");
  } else if (c.mode == Mode::EtProfile) {
    if (!(1 <= c.k && c.k < c.n)) throw ConfigError("et-profile needs 1 <= k < n");
  } else if (c.k > c.n) {
    throw ConfigError("census needs k <= n");
  }
}

enum class Verdict { ExactPass, RatioReported, Fail };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::ExactPass: return "EXACT-PASS";
    case Verdict::RatioReported: return "RATIO-REPORTED";
    case Verdict::Fail: return "FAIL";
  }
  return "";
}

struct CheckRecord {
  std::string name;
  std::string ref;
  json exact_value;
  json formula_value;
  std::optional<double> ratio;
  Verdict verdict = Verdict::RatioReported;
};

class ExperimentReport {
 public:
  explicit ExperimentReport(const ExperimentConfig& c) : config_(c) {
    doc_["schema_version"] = kSchemaVersion;
    doc_["config"] = {{"q", c.q},           {"n", c.n},
                      {"k", c.k},           {"h", needs_incidence(c.mode) ? json(c.h) : json(nullptr)},
                      {"seed", c.seed},     {"trials", c.trials},
                      {"size_k", c.size_k.to_json()}, {"size_h", c.size_h.to_json()},
                      {"mode", to_string(c.mode)}};
    doc_["prng"] = {{"name", SplitMix64::kName}, {"version", SplitMix64::kVersion}, {"seed", c.seed}};
  }

  const ExperimentConfig& config() const { return config_; }
  json& section(const char* key) { return doc_[key]; }
  const json& doc() const { return doc_; }
  const std::vector<CheckRecord>& checks() const { return checks_; }
  std::vector<TypeCensus>& censuses() { return censuses_; }

  void exact(std::string name, std::string ref, json got, json expected, bool pass) {
    checks_.push_back({std::move(name), std::move(ref), std::move(got), std::move(expected), std::nullopt,
                       pass ? Verdict::ExactPass : Verdict::Fail});
  }

  void ratio(std::string name, std::string ref, json got, json formula) {
    std::optional<double> r;
    if (got.is_number() && formula.is_number() && formula.get<double>() != 0.0)
      r = got.get<double>() / formula.get<double>();
    checks_.push_back({std::move(name), std::move(ref), std::move(got), std::move(formula), r,
                       Verdict::RatioReported});
  }

  void fail(std::string name, std::string ref, std::string message) {
    checks_.push_back({std::move(name), std::move(ref), std::move(message), nullptr, std::nullopt, Verdict::Fail});
  }

  bool failed() const {
    for (const auto& c : checks_)
      if (c.verdict == Verdict::Fail) return true;
    return false;
  }

  int exit_code() const { return failed() ? 1 : 0; }

  json to_json() const {
    json out = doc_;
    json arr = json::array();
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& c : checks_) {
      arr.push_back({{"name", c.name},
                     {"ref", c.ref},
                     {"exact_value", c.exact_value},
                     {"formula_value", c.formula_value},
                     {"ratio", c.ratio ? json(*c.ratio) : json(nullptr)},
                     {"verdict", to_string(c.verdict)}});
      ++counts[static_cast<int>(c.verdict)];
    }
    out["checks"] = std::move(arr);
    out["summary"] = {{"exact_pass", counts[0]},
                      {"ratio_reported", counts[1]},
                      {"fail", counts[2]},
                      {"exit_code", exit_code()}};
    return out;
  }

  /// Census mode: the census table. Otherwise one row per check.
  std::string to_csv() const {
    if (config_.mode == Mode::Census) return census_csv(censuses_);
    std::ostringstream os;
    os << "name,ref,exact_value,formula_value,ratio,verdict\n";
    auto cell = [](const json& v) -> std::string {
      if (v.is_null()) return "";
      std::string s = v.is_string() ? v.get<std::string>() : v.dump();
      if (s.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char ch : s) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return quoted + "\"";
      }
      return s;
    };
    for (const auto& c : checks_)
      os << cell(c.name) << ',' << cell(c.ref) << ',' << cell(c.exact_value) << ',' << cell(c.formula_value) << ','
         << (c.ratio ? format_double(*c.ratio) : "") << ',' << to_string(c.verdict) << '\n';
    return os.str();
  }

 private:
  ExperimentConfig config_;
  json doc_;
  std::vector<CheckRecord> checks_;
  std::vector<TypeCensus> censuses_;
};

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// Edge list: a one-line JSON header then "k_index h_index" per edge.
inline void write_edge_list(const IncidenceGraph& g, std::ostream& os) {
  const auto& p = g.params();
  const DegreeCheck d = degree_check(g);
  json header = {{"q", p.q},          {"n", p.n},
                 {"k", p.k},          {"h", p.h},
                 {"size_a", g.size_a()}, {"size_b", g.size_b()},
                 {"left_degree", d.left_degree}, {"right_degree", d.right_degree}};
  os << header.dump() << '\n';
  for (std::size_t i = 0; i < g.size_a(); ++i)
    for (std::size_t j = 0; j < g.size_b(); ++j)
      if (g.adjacent(i, j)) os << i << ' ' << j << '\n';
}

namespace detail {

class StageTimer {
 public:
  StageTimer(std::ostream* log, const char* name) : log_(log), name_(name), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    if (!log_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    *log_ << "[timing] " << name_ << ": " << format_double(std::round(s * 1000.0) / 1000.0) << " s\n";
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::ostream* log_;
  const char* name_;
  std::chrono::steady_clock::time_point t0_;
};

inline json census_record(const TypeCensus& c) {
  json types = json::array();
  for (const auto& [type, count] : c.counts) {
    const bool full = type.nondegenerate() && type.dim == c.k;
    const double formula = census_formula(c.q, c.n, c.k);
    types.push_back({{"type", type.name()},
                     {"rank", type.rank},
                     {"disc_class", to_string(type.disc)},
                     {"exact_count", count},
                     {"formula_value", full ? json(formula) : json(nullptr)},
                     {"ratio", full ? json(static_cast<double>(count) / formula) : json(nullptr)}});
  }
  return {{"q", c.q},
          {"n", c.n},
          {"k", c.k},
          {"total", c.total()},
          {"gaussian_binomial", gaussian_binomial(c.q, c.n, c.k)},
          {"types", std::move(types)}};
}

inline void census_stage(ExperimentReport& rep, const FieldCtx& f, std::size_t n, std::size_t k) {
  const TypeCensus c = census(f, n, k);
  rep.censuses().push_back(c);
  rep.section("census").push_back(census_record(c));
  const std::string tag = "(n=" + std::to_string(n) + ",k=" + std::to_string(k) + ")";
  const std::uint64_t gb = gaussian_binomial(f.p(), n, k);
  rep.exact("census_total" + tag, "gaussian binomial count", c.total(), gb, c.total() == gb);
  if (k == 0) return;
  const double formula = census_formula(f.p(), n, k);
  const std::uint64_t dot = c.count(IsoType::dot(k)), ldot = c.count(IsoType::lambda_dot(k));
  rep.ratio("dot_count_vs_asymptotic" + tag, "dot_k-subspace count ~ q^{k(n-k)}/2", dot, formula);
  rep.ratio("ldot_count_vs_asymptotic" + tag, "ldot_k-subspace count ~ q^{k(n-k)}/2", ldot, formula);
  const double diff = std::abs(static_cast<double>(dot) - static_cast<double>(ldot));
  rep.ratio("dot_ldot_difference" + tag, "dot/ldot counts agree to leading order", diff,
            std::pow(static_cast<double>(f.p()), static_cast<double>(k * (n - k)) - 1.0));
}

inline json class_json(const PairClass& c) { return {{"t", c.t}, {"sum_type", c.sum_type.name()}}; }

/// E_t class degrees: per-class values plus the nondegenerate-maximum flags.
inline void et_stage(ExperimentReport& rep, const std::vector<EtClassDegree>& classes, std::size_t vertices,
                     std::size_t rows, bool sampled) {
  EtProfile prof;
  prof.classes = classes;
  json arr = json::array();
  for (const auto& c : classes) {
    json rec = class_json(c.cls);
    rec["degree_min"] = c.degree_min;
    rec["degree_max"] = c.degree_max;
    rec["formula_value"] = optional_json(c.formula);
    rec["ratio"] = c.formula ? json(static_cast<double>(c.degree_max) / *c.formula) : json(nullptr);
    arr.push_back(std::move(rec));
  }
  json flags = json::object();
  std::vector<std::size_t> ts;
  for (const auto& c : classes)
    if (ts.empty() || ts.back() != c.cls.t) ts.push_back(c.cls.t);
  for (auto t : ts) flags[std::to_string(t)] = prof.max_at_nondegenerate(t);

  rep.section("et_profile") = {{"vertices", vertices},     {"rows_examined", rows},
                               {"sampled", sampled},       {"classes", std::move(arr)},
                               {"max_at_nondegenerate", flags}};
  const bool constant = prof.constant_degrees();
  rep.exact("et_degree_constancy", "E_t degree constant per sum class", constant, true, constant);
  for (const auto& c : classes)
    if (c.formula)
      rep.ratio("et_degree_vs_formula[" + c.cls.name() + "]", "E_t degree ~ q^{(t-k)(n+2k-2t)}/2", c.degree_max,
                *c.formula);
  for (auto t : ts)
    rep.ratio("et_max_at_nondegenerate[t=" + std::to_string(t) + "]", "E_t maximal degree at nondegenerate sum",
              flags[std::to_string(t)], true);
}

inline void et_profile_mode(ExperimentReport& rep, const FieldCtx& f, std::size_t n, std::size_t k) {
  const EtProfile p = et_degree_profile(f, n, k);
  et_stage(rep, p.classes, p.vertices, p.rows_examined, p.sampled);
}

inline json graph_record(const IncidenceGraph& g, const DegreeCheck& d) {
  return {{"size_a", g.size_a()},
          {"size_b", g.size_b()},
          {"edges", g.edges()},
          {"left_degree", d.left_degree},
          {"right_degree", d.right_degree},
          {"formula_a", d.formula_a},
          {"ratio", d.ratio}};
}

/// Returns false if a structural failure stops the pipeline.
inline bool degree_stage(ExperimentReport& rep, const IncidenceGraph& g, DegreeCheck& d) {
  try {
    d = degree_check(g);
  } catch (const StructureError& e) {
    rep.fail("biregularity", "biregular incidence graph", e.what());
    return false;
  }
  rep.section("graph") = graph_record(g, d);
  rep.exact("biregularity", "biregular incidence graph", json{{"left", d.left_degree}, {"right", d.right_degree}},
            nullptr, true);
  rep.exact("edge_count", "edges = a|A| = b|B|", g.edges(), d.left_degree * g.size_a(),
            g.edges() == d.left_degree * g.size_a() && g.edges() == d.right_degree * g.size_b());
  rep.ratio("left_degree_vs_formula", "dot_h over fixed dot_k ~ q^{(h-k)(n-h)}/2", d.left_degree, d.formula_a);
  return true;
}

inline bool decomposition_stage(ExperimentReport& rep, const IncidenceGraph& g, const DegreeCheck& d,
                                bool with_et) {
  DecompositionReport r;
  try {
    r = nnt_decompose(g);
  } catch (const StructureError& e) {
    rep.fail("nnt_class_constancy", "N N^T constant per pair class", e.what());
    return false;
  }
  json classes = json::array();
  for (const auto& c : r.classes) {
    json rec = class_json(c.cls);
    rec["b"] = c.b;
    rec["degree_min"] = c.degree_min;
    rec["degree_max"] = c.degree_max;
    rec["ordered_pairs"] = c.ordered_pairs;
    rec["b_formula"] = optional_json(c.b_formula);
    rec["degree_formula"] = optional_json(c.degree_formula);
    classes.push_back(std::move(rec));
  }
  rep.section("decomposition") = {{"a", r.a},
                                  {"row_sum", r.row_sum},
                                  {"right_degree", r.right_degree},
                                  {"trace", r.trace},
                                  {"rows_examined", r.rows_examined},
                                  {"sampled", r.sampled},
                                  {"classes", std::move(classes)}};
  rep.exact("nnt_class_constancy", "N N^T constant per pair class", r.classes.size(), nullptr, true);
  rep.exact("nnt_diagonal", "N N^T diagonal = left degree", r.a, d.left_degree, r.a == d.left_degree);
  rep.exact("nnt_trace", "trace N N^T = a|A|", r.trace, r.a * r.rows_examined, r.trace == r.a * r.rows_examined);
  rep.exact("nnt_row_sum", "N N^T row sum = a * right degree", r.row_sum, r.a * r.right_degree,
            r.row_sum_is_a_times_right_degree() && r.right_degree == d.right_degree);
  std::uint64_t accounted = r.a;
  for (const auto& c : r.classes) accounted += c.degree_min * c.b;
  rep.exact("nnt_accounting", "a + sum(class size * b) = row sum", accounted, r.row_sum, r.accounting_exact());

  for (const auto& c : r.classes)
    if (c.b_formula)
      rep.ratio("b_vs_formula[" + c.cls.name() + "]", "common dot_h over fixed pair ~ q^{(h-t)(n-h)}/2", c.b,
                *c.b_formula);
  // dot_t and ldot_t share one formula value; report the exact pair.
  for (const auto& x : r.classes) {
    if (!x.cls.sum_type.is_dot()) continue;
    for (const auto& y : r.classes)
      if (y.cls.t == x.cls.t && y.cls.sum_type == IsoType::lambda_dot(x.cls.t))
        rep.ratio("b_dot_vs_ldot[t=" + std::to_string(x.cls.t) + "]", "b equal for dot_t and ldot_t sums", x.b, y.b);
  }

  if (with_et) {
    std::vector<EtClassDegree> v;
    for (const auto& c : r.classes) v.push_back({c.cls, c.degree_min, c.degree_max, c.degree_formula});
    et_stage(rep, v, g.size_a(), r.rows_examined, r.sampled);
  }
  return true;
}

inline std::optional<SpectralReport> spectral_stage(ExperimentReport& rep, const IncidenceGraph& g) {
  SpectralReport s;
  try {
    s = gram_side_eigen(g);
  } catch (const StructureError& e) {
    rep.fail("gram_row_sums", "constant Gram row sums", e.what());
    return std::nullopt;
  } catch (const SizeGuardError&) {
    throw;
  } catch (const std::runtime_error& e) {
    rep.fail("power_iteration_converged", "deflated power iteration", e.what());
    return std::nullopt;
  }
  json rec = {{"side", std::string(1, s.side)},
              {"side_size", s.side_size},
              {"left_degree", s.left_degree},
              {"right_degree", s.right_degree},
              {"lambda1", s.lambda1},
              {"lambda3", s.lambda3},
              {"lambda3_squared", s.lambda3_squared},
              {"bound", s.bound.bound},
              {"ratio", s.ratio},
              {"summand_exponent", s.bound.summand_exponent},
              {"identity_summand", s.bound.identity_summand},
              {"offdiagonal_summand", s.bound.offdiagonal_summand},
              {"summand_ratio", s.bound.summand_ratio},
              {"hypotheses_hold", s.bound.hypotheses_hold},
              {"warnings", s.bound.warnings},
              {"solver",
               {{"method", "deflated power iteration"},
                {"iterations", s.solver.iterations},
                {"residual", s.solver.residual},
                {"converged", s.solver.converged}}}};
  rep.exact("gram_row_sums", "constant Gram row sums", s.left_degree * s.right_degree, nullptr, true);
  rep.exact("lambda3_le_lambda1", "lambda3 <= lambda1", s.lambda3, s.lambda1, s.lambda3 <= s.lambda1);

  const double top_residual = top_eigenvector_residual(g);
  rec["top_eigenvector_residual"] = top_residual;
  rep.exact("top_eigenvector_identity", "sqrt(a)1_A + sqrt(b)1_B eigenvector", top_residual, 0.0,
            top_residual <= kCrossCheckTolerance);

  if (s.side_size <= kDenseCrossCheckLimit) {
    const auto spec = dense_spectrum(gram_matrix(g, s.side == 'B' ? GramSide::B : GramSide::A));
    const double top = spec.back();
    const double second = spec.size() > 1 ? spec[spec.size() - 2] : 0.0;
    double sum = 0.0;
    for (double x : spec) sum += x;
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1.0); };
    rec["dense"] = {{"solver", "eigen selfadjoint"}, {"top", top}, {"second", second}, {"sum", sum}};
    rep.exact("dense_crosscheck_lambda3", "power iteration vs dense solver", s.lambda3_squared, second,
              rel(s.lambda3_squared, second) <= kCrossCheckTolerance);
    rep.exact("dense_crosscheck_lambda1", "sqrt(ab) vs dense solver", s.lambda1 * s.lambda1, top,
              rel(s.lambda1 * s.lambda1, top) <= kCrossCheckTolerance);
    rep.exact("trace_identity", "eigenvalue sum = edges", sum, g.edges(),
              rel(sum, static_cast<double>(g.edges())) <= kCrossCheckTolerance);
  }
  rep.section("spectral") = std::move(rec);
  rep.ratio("lambda3_vs_bound", "third eigenvalue bound sqrt(k/2) q^{E/2}", s.lambda3, s.bound.bound);
  rep.ratio("bound_summand_ratio", "identity summand vs off-diagonal summand", s.bound.identity_summand,
            s.bound.offdiagonal_summand);
  return s;
}

inline void mixing_stage(ExperimentReport& rep, const IncidenceGraph& g, double lambda3, SplitMix64 rng) {
  const auto& c = rep.config();
  json trials = json::array();
  std::size_t held = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < c.trials; ++t) {
    const std::size_t sx = c.size_k.resolve(g.size_a(), 1 + rng.below(g.size_a()), "size-k");
    const std::size_t sy = c.size_h.resolve(g.size_b(), 1 + rng.below(g.size_b()), "size-h");
    const auto xs = sample_subsets(g.size_a(), sx, rng);
    const auto ys = sample_subsets(g.size_b(), sy, rng);
    const MixingCheck m = mixing_check(g, xs, ys, lambda3);
    held += m.holds;
    if (m.rhs > 0) worst = std::max(worst, m.error / m.rhs);
    trials.push_back({{"size_x", m.size_x},
                      {"size_y", m.size_y},
                      {"incidences", m.incidences},
                      {"main_term", m.main_term},
                      {"error", m.error},
                      {"rhs", m.rhs},
                      {"holds", m.holds}});
  }
  rep.section("mixing") = {{"trials", c.trials},
                           {"held", held},
                           {"max_error_over_rhs", worst},
                           {"fp_slack", kFpSlack},
                           {"records", std::move(trials)}};
  rep.exact("mixing_inequality", "|I - a|X||Y|/|B|| <= lambda3 sqrt(|X||Y|)", held, c.trials, held == c.trials);
}

inline json main_record(const MainTheoremCheck& m) {
  return {{"size_k", m.size_k},
          {"size_h", m.size_h},
          {"incidences", m.incidences},
          {"main_term", m.main_term},
          {"deviation", m.deviation},
          {"exact_main_term", m.exact_main_term},
          {"exact_deviation", m.exact_deviation},
          {"certificate", m.certificate},
          {"power_bound", m.power_bound},
          {"exact_within_certificate", m.exact_within_certificate},
          {"within_certificate", m.within_certificate},
          {"certificate_ratio", m.certificate_ratio},
          {"power_ratio", m.power_ratio},
          {"product", m.product},
          {"threshold", m.threshold},
          {"above_threshold", m.above_threshold},
          {"nonempty", m.nonempty}};
}

inline void main_theorem_stage(ExperimentReport& rep, const IncidenceGraph& g, double lambda3, SplitMix64 rng) {
  const auto& c = rep.config();
  const auto& p = g.params();
  const ErrorExponent e = formula_error_exponent(p.q, p.n, p.k, p.h);
  const std::size_t sk = c.size_k.resolve(g.size_a(), g.size_a() / 2, "size-k");
  const std::size_t sh = c.size_h.resolve(g.size_b(), g.size_b() / 2, "size-h");

  json trials = json::array();
  std::size_t exact_held = 0, stated_held = 0, above = 0, nonempty = 0;
  double max_power_ratio = 0.0, max_cert_ratio = 0.0;
  for (std::size_t t = 0; t < c.trials; ++t) {
    const auto ks = sample_subsets(g.size_a(), sk, rng);
    const auto hs = sample_subsets(g.size_b(), sh, rng);
    const MainTheoremCheck last = main_theorem_check(g, ks, hs, lambda3);
    exact_held += last.exact_within_certificate;
    stated_held += last.within_certificate;
    above += last.above_threshold;
    nonempty += last.nonempty;
    max_power_ratio = std::max(max_power_ratio, last.power_ratio);
    max_cert_ratio = std::max(max_cert_ratio, last.certificate_ratio);
    trials.push_back(main_record(last));
  }

  std::vector<std::size_t> all_a(g.size_a()), all_b(g.size_b());
  for (std::size_t i = 0; i < all_a.size(); ++i) all_a[i] = i;
  for (std::size_t j = 0; j < all_b.size(); ++j) all_b[j] = j;
  const MainTheoremCheck full = main_theorem_check(g, all_a, all_b, lambda3);

  rep.section("main_theorem") = {{"exponent", e.exponent},
                                 {"power_value", e.value},
                                 {"main_term_exponent", e.main_term_exponent},
                                 {"hypotheses_hold", e.hypotheses_hold},
                                 {"warnings", e.warnings},
                                 {"density_log_q", full.density_log_q},
                                 {"trials", c.trials},
                                 {"size_k", sk},
                                 {"size_h", sh},
                                 {"exact_within_certificate", exact_held},
                                 {"stated_main_term_within_certificate", stated_held},
                                 {"max_certificate_ratio", max_cert_ratio},
                                 {"max_power_ratio", max_power_ratio},
                                 {"records", std::move(trials)}};
  rep.section("nonemptiness") = {{"threshold_exponent", e.twice_exponent + 2 * e.main_term_exponent},
                              {"threshold", full.threshold},
                              {"full_parts", main_record(full)},
                              {"trials_above_threshold", above},
                              {"trials_nonempty", nonempty}};

  rep.exact("incidence_certificate", "|I - a|K||H|/|B|| <= lambda3 sqrt(|K||H|)", exact_held, c.trials,
            exact_held == c.trials);
  rep.ratio("stated_main_term_within_certificate", "|I - |K||H|/q^{k(n-h)}| <= lambda3 sqrt(|K||H|)", stated_held,
            c.trials);
  rep.ratio("deviation_over_power_bound", "deviation / (q^{exponent} sqrt(|K||H|))", max_power_ratio, 1.0);
  rep.ratio("density_exponent", "log_q(a/|B|) vs -k(n-h)", full.density_log_q,
            -static_cast<double>(e.main_term_exponent));
  rep.exact("nonempty_full_parts", "I(A,B) > 0", full.incidences, nullptr, full.nonempty);
  rep.ratio("full_parts_vs_threshold", "|A||B| vs nonemptiness threshold", full.product, full.threshold);
}

}  // namespace detail

/// Runs the configured mode. Throws ConfigError for invalid configs and
/// SizeGuardError when a guard trips; structural failures become FAIL checks.
inline ExperimentReport run(const ExperimentConfig& c, std::ostream* log = nullptr) {
  validate(c);
  ExperimentReport rep(c);
  const auto field = std::make_shared<const FieldCtx>(c.q);
  const FieldCtx& f = *field;

  if (c.mode == Mode::Census) {
    detail::StageTimer t(log, "census");
    rep.section("census") = json::array();
    detail::census_stage(rep, f, c.n, c.k);
    return rep;
  }
  if (c.mode == Mode::EtProfile) {
    detail::StageTimer t(log, "et-profile");
    detail::et_profile_mode(rep, f, c.n, c.k);
    return rep;
  }

  if (c.mode == Mode::VerifyAll) {
    detail::StageTimer t(log, "census");
    rep.section("census") = json::array();
    detail::census_stage(rep, f, c.n, c.k);
    detail::census_stage(rep, f, c.n, c.h);
  }

  std::optional<IncidenceGraph> g;
  {
    detail::StageTimer t(log, "build graph");
    g.emplace(build_graph(c.q, c.n, c.k, c.h));
  }
  DegreeCheck deg;
  if (!detail::degree_stage(rep, *g, deg)) return rep;

  if (c.mode == Mode::Graph || c.mode == Mode::VerifyAll) {
    detail::StageTimer t(log, "decomposition");
    if (!detail::decomposition_stage(rep, *g, deg, c.mode == Mode::VerifyAll)) return rep;
  }
  if (c.mode == Mode::Graph) return rep;

  std::optional<SpectralReport> s;
  {
    detail::StageTimer t(log, "spectral");
    s = detail::spectral_stage(rep, *g);
  }
  if (!s) return rep;

  SplitMix64 root(c.seed);
  SplitMix64 mixing_rng = root.split();
  SplitMix64 main_rng = root.split();
  if (c.mode == Mode::Mixing || c.mode == Mode::VerifyAll) {
    detail::StageTimer t(log, "mixing");
    detail::mixing_stage(rep, *g, s->lambda3, mixing_rng);
  }
  if (c.mode == Mode::MainTheorem || c.mode == Mode::VerifyAll) {
    detail::StageTimer t(log, "main theorem");
    detail::main_theorem_stage(rep, *g, s->lambda3, main_rng);
  }
  return rep;
}

}  // namespace dotinc

#endif  // DOTINC_HARNESS_HPP
