// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "spiquad/cli.hpp"
#include "spiquad/ruleio.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

using namespace spiquad;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch() {
  fs::path p = fs::temp_directory_path() / ("spiquad-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Target {
  DomainKind d;
  int q;
  long n;
};

const std::vector<Target> kTargets = {
    {DomainKind::square, 1, 1},   {DomainKind::square, 3, 4},   {DomainKind::square, 5, 8},
    {DomainKind::square, 7, 12},  {DomainKind::square, 9, 20},  {DomainKind::cube, 1, 1},
    {DomainKind::cube, 3, 8},     {DomainKind::cube, 5, 14},    {DomainKind::cube, 7, 34},
    {DomainKind::prism, 1, 1},    {DomainKind::prism, 2, 5},    {DomainKind::prism, 3, 8},
    {DomainKind::prism, 4, 11},   {DomainKind::prism, 5, 16},   {DomainKind::pyramid, 1, 1},
    {DomainKind::pyramid, 2, 5},  {DomainKind::pyramid, 3, 6},  {DomainKind::pyramid, 4, 10},
    {DomainKind::pyramid, 5, 15},
};

std::string label(DomainKind d, int q) {
  return std::string(to_string(d)) + " q" + std::to_string(q);
}

std::string describe(const Certificate& c) {
  std::ostringstream out;
  out << "residual " << c.residual.to_string(3) << (c.positive ? "" : " non-positive")
      << (c.interior ? "" : " exterior") << (c.symmetric ? "" : " asymmetric");
  return out.str();
}

// Rules built for criterion 1, certified again for criterion 3.
std::vector<QuadRule> built;

void criterion1(const SolverConfig& cfg, const AuxRuleSource& aux) {
  auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  bool pass = true;
  for (const auto& t : kTargets) {
    BuildOptions o;
    o.solver = cfg;
    QuadRule r = build_rule(t.d, t.q, o, aux).reduced.rule;
    const long n = static_cast<long>(r.node_count());
    const bool ok = n <= t.n && certify(r, t.q).passed(cfg.tolerance);
    if (!ok) {
      pass = false;
      detail << " [" << label(t.d, t.q) << " n=" << n << " want " << t.n << "]";
    }
    built.push_back(std::move(r));
  }
  std::ostringstream head;
  head << kTargets.size() << " node counts, " << static_cast<int>(seconds_since(t0)) << " s";
  report(1, pass, head.str() + detail.str());
}

void criterion2(const SolverConfig& cfg, const AuxRuleSource& aux) {
  BuildOptions o;
  o.solver = cfg;
  QuadRule sq = build_rule(DomainKind::square, 15, o, aux).reduced.rule;
  QuadRule alg = init_pyramid_algebraic(15, sq, cfg);
  // Tensor cube rule of per-axis degree q+2; its Duffy image is exact to q.
  const long duffy = static_cast<long>(init_pyramid_duffy(init_cube(17)).size());
  const long n_sq = static_cast<long>(sq.node_count()), n_alg = static_cast<long>(alg.node_count());
  std::ostringstream detail;
  detail << "square q15 n=" << n_sq << ", algebraic pyramid q15 n=" << n_alg << ", tensor Duffy n=" << duffy
         << " (degree-33 cube rule unavailable)";
  report(2, n_sq == 48 && n_alg == 441 && n_alg < duffy, detail.str());
  built.push_back(std::move(sq));
}

void criterion3(const SolverConfig& cfg, const fs::path& dir) {
  bool pass = true;
  std::ostringstream detail;
  int count = 0;
  for (const auto& r : built) {
    const fs::path file = dir / (std::string(to_string(r.domain)) + "-" + std::to_string(r.degree) + ".rule");
    write_rule(r, file, cfg.tolerance);
    for (const QuadRule& rule : {r, read_rule(file).rule}) {
      Certificate c = certify(rule, rule.degree);
      ++count;
      if (!c.passed(cfg.tolerance)) {
        pass = false;
        detail << " [" << label(rule.domain, rule.degree) << " " << describe(c) << "]";
      }
    }
  }
  // External node lists: generated triangle and tetrahedron rules written out as x y [z] w.
  IngestOptions io;
  io.solver = cfg;
  auto gen = generated_aux_source(cfg);
  for (auto [d, q] : {std::pair{DomainKind::triangle, 5}, std::pair{DomainKind::tetrahedron, 3}}) {
    const fs::path file = dir / (std::string(to_string(d)) + "-" + std::to_string(q) + ".txt");
    {
      std::ofstream f(file);
      for (const auto& n : expand_rule(gen(d, q).rule)) {
        for (const auto& x : n.x) f << x.to_string() << " ";
        f << n.w.to_string() << "\n";
      }
    }
    QuadRule r = ingest_external(file, d, q, io).rule;
    Certificate c = certify(r, q);
    ++count;
    if (!c.passed(cfg.tolerance)) {
      pass = false;
      detail << " [ingested " << label(d, q) << " " << describe(c) << "]";
    }
  }
  report(3, pass, std::to_string(count) + " certificates" + detail.str());
}

void criterion4() {
  auto sq = efficiency(21, 85, DomainKind::square);
  auto cu = efficiency(15, 199, DomainKind::cube);
  const Real tol(1e-12);
  const Real dsq = abs(sq.e - Real(36) / Real(121)), dcu = abs(cu.e - Real(313) / Real(512));
  std::ostringstream detail;
  detail << "square q21 n=85 e=" << sq.e.to_string(8) << ", cube q15 n=199 e=" << cu.e.to_string(8)
         << " (fixture node counts)";
  report(4, dsq < tol && dcu < tol, detail.str());
}

void criterion5(const std::vector<QuadRule>& rules) {
  struct Case {
    DomainKind d;
    std::vector<int> k;
    int levels;
  };
  bool pass = true;
  std::ostringstream detail;
  for (const Case& c : {Case{DomainKind::square, {30, 30}, 8}, Case{DomainKind::cube, {30, 10, 20}, 7}}) {
    const QuadRule* rule = nullptr;
    for (const auto& r : rules)
      if (r.domain == c.d && r.degree == 5) rule = &r;
    if (!rule) throw MissingData("no " + label(c.d, 5) + " rule from criterion 1");
    ConvergenceReport rep = convergence_study(*rule, c.k, c.levels);
    // The last three measured rates, all above the precision floor.
    int measured = 0;
    double lowest = 1e300;
    for (auto it = rep.rates.rbegin(); it != rep.rates.rend() && measured < 3; ++it) {
      if (!*it) break;
      lowest = std::min(lowest, **it);
      ++measured;
    }
    const bool ok = measured == 3 && lowest >= 6.0;
    pass = pass && ok;
    detail << (c.d == DomainKind::square ? "square" : " cube") << " q5 min rate " << lowest << " over " << measured
           << " refinements" << (c.d == DomainKind::square ? "," : "");
  }
  report(5, pass, detail.str());
}

void criterion6() {
  const fs::path dir = fs::canonical("/proc/self/exe").parent_path();
  bool pass = true;
  std::ostringstream detail;
  for (const char* name : {"test_mpnum", "test_domains", "test_polybasis", "test_lmsolver", "test_builder",
                           "test_verifier", "test_ruleio"}) {
    const fs::path exe = dir / name;
    const std::string cmd = "'" + exe.string() + "' --test-case='property*' --minimal >/dev/null 2>&1";
    const bool ok = fs::exists(exe) && std::system(cmd.c_str()) == 0;
    if (!ok) {
      pass = false;
      detail << " [" << name << "]";
    }
  }
  report(6, pass, "property suites" + detail.str());
}

void criterion7(const fs::path& dir) {
  std::vector<std::string> texts;
  for (int run = 0; run < 2; ++run) {
    const std::string rule = (dir / ("cube7-" + std::to_string(run) + ".rule")).string();
    const std::string trace = (dir / ("cube7-" + std::to_string(run) + ".csv")).string();
    std::vector<const char*> argv{"spiquad", "generate", "cube", "7", "--mode", "fast",
                                  "--out", rule.c_str(), "--trace", trace.c_str()};
    std::ostringstream out, err;
    if (run_cli(static_cast<int>(argv.size()), argv.data(), out, err) != kExitOk) {
      report(7, false, "generate cube 7 failed: " + err.str());
      return;
    }
    texts.push_back(slurp(rule));
    texts.push_back(slurp(trace));
  }
  const bool pass = !texts[0].empty() && texts[0] == texts[2] && texts[1] == texts[3];
  report(7, pass, "generate cube 7 twice, rule " + std::to_string(texts[0].size()) + " bytes, trace " +
                      std::to_string(texts[1].size()) + " bytes");
}

}  // namespace

int main() {
  const fs::path dir = scratch();
  PrecisionScope scope(mode_bits(PrecisionMode::fast));
  const SolverConfig cfg = SolverConfig::for_mode(PrecisionMode::fast);
  const AuxRuleSource aux = generated_aux_source(cfg);

  auto guarded = [](int criterion, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report(criterion, false, std::string("exception: ") + e.what());
    }
  };
  guarded(1, [&] { criterion1(cfg, aux); });
  guarded(2, [&] { criterion2(cfg, aux); });
  guarded(3, [&] { criterion3(cfg, dir); });
  guarded(4, [&] { criterion4(); });
  guarded(5, [&] { criterion5(built); });
  guarded(6, [&] { criterion6(); });
  guarded(7, [&] { criterion7(dir); });
  fs::remove_all(dir);
  std::cout << (failures ? "acceptance: FAIL" : "acceptance: PASS") << std::endl;
  return failures ? 1 : 0;
}
