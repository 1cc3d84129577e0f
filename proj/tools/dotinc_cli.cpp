// dotinc: run incidence experiments over dot-subspaces of F_q^n.
//
// Exit codes: 0 ok, 1 an EXACT check failed, 2 usage or config error,
// 3 size guard tripped.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "dotinc/harness.hpp"

namespace {

int write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    return 2;
  }
  out << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incidence experiments between dot_k- and dot_h-subspaces of F_q^n"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", "dotinc 1.0.0");

  dotinc::ExperimentConfig cfg;
  std::string mode = "verify-all", size_k, size_h, out, format = "json", edges;
  bool quiet = false;

  app.add_option("--q", cfg.q, "odd prime field size")->capture_default_str();
  app.add_option("--n", cfg.n, "ambient dimension")->capture_default_str();
  app.add_option("--k", cfg.k, "dimension of part A subspaces")->capture_default_str();
  app.add_option("--h", cfg.h, "dimension of part B subspaces")->capture_default_str();
  app.add_option("--seed", cfg.seed, "PRNG seed (splitmix64)")->capture_default_str();
  app.add_option("--trials", cfg.trials, "random subset trials for mixing and main-theorem")->capture_default_str();
  app.add_option("--size-k", size_k, "subset size in part A: a count or 'full'");
  app.add_option("--size-h", size_h, "subset size in part B: a count or 'full'");
  app.add_option("--mode", mode, "verify-all|census|graph|spectral|mixing|main-theorem|et-profile")
      ->capture_default_str();
  app.add_option("--out", out, "report path (default stdout)");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--edges", edges, "graph mode: also write the edge list to this path");
  app.add_flag("--quiet", quiet, "suppress stage timings on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cfg.mode = dotinc::parse_mode(mode);
    if (!size_k.empty()) cfg.size_k = dotinc::SubsetSize::parse(size_k);
    if (!size_h.empty()) cfg.size_h = dotinc::SubsetSize::parse(size_h);
    if (!edges.empty() && cfg.mode != dotinc::Mode::Graph) throw dotinc::ConfigError("--edges needs --mode graph");

    const auto report = dotinc::run(cfg, quiet ? nullptr : &std::cerr);
    const std::string text = format == "csv" ? report.to_csv() : report.to_json().dump(2) + "\n";
    if (const int rc = write_text(out, text)) return rc;

    if (!edges.empty()) {
      const auto g = dotinc::build_graph(cfg.q, cfg.n, cfg.k, cfg.h);
      std::ofstream es(edges, std::ios::binary);
      if (!es) {
        std::cerr << "error: cannot open " << edges << " for writing\n";
        return 2;
      }
      dotinc::write_edge_list(g, es);
    }
    for (const auto& c : report.checks())
      if (c.verdict == dotinc::Verdict::Fail) std::cerr << "FAIL " << c.name << '\n';
    return report.exit_code();
  } catch (const dotinc::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const dotinc::SizeGuardError& e) {
    std::cerr << "size guard: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
