#include "spiquad/cli.hpp"

#include "spiquad/ruleio.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace spiquad {

namespace {

struct Settings {
  std::string mode = "fast";
  std::string tolerance;
  std::string catalog;
  std::string data;
  bool no_fallback = false;
  bool no_restarts = false;
  std::string pyramid_init = "geometric";
  std::string ct;
};

class UsageError : public Error {
public:
  using Error::Error;
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Everything a command needs, resolved at the mode's precision.
struct Context {
  Settings s;
  PrecisionMode mode = PrecisionMode::fast;
  SolverConfig solver;
  AuxRuleSource aux;

  explicit Context(const Settings& settings) : s(settings) {
    mode = parse_mode(s.mode);
    solver = SolverConfig::for_mode(mode);
    if (!s.tolerance.empty()) {
      try {
        solver.tolerance = Real::parse(s.tolerance);
      } catch (const Error&) {
        throw UsageError("invalid --tolerance '" + s.tolerance + "'");
      }
    }
    AuxRuleSource generated = generated_aux_source(solver);
    AuxRuleSource base = generated;
    const std::string data = env_or("SPIQUAD_DATA", s.data);
    if (!s.data.empty() || !data.empty()) {
      IngestOptions io;
      io.solver = solver;
      base = data_aux_source(s.data.empty() ? data : s.data, s.no_fallback ? AuxRuleSource{} : generated, io);
    } else if (s.no_fallback) {
      base = [](DomainKind d, int q) -> ExternalRuleData {
        throw MissingData("no " + std::string(to_string(d)) + " rule of degree " + std::to_string(q) +
                          " (no data directory and fallback disabled)");
      };
    }
    auto cache = std::make_shared<std::map<std::pair<int, int>, ExternalRuleData>>();
    aux = [base, cache](DomainKind d, int q) {
      auto key = std::make_pair(static_cast<int>(d), q);
      auto it = cache->find(key);
      if (it == cache->end()) it = cache->emplace(key, base(d, q)).first;
      return it->second;
    };
  }

  std::string catalog_root() const { return s.catalog.empty() ? env_or("SPIQUAD_CATALOG", "") : s.catalog; }

  BuildOptions build_options(DomainKind d, int q) const {
    BuildOptions o;
    o.mode = mode;
    o.solver = solver;
    o.restarts = !s.no_restarts;
    if (s.pyramid_init == "algebraic") {
      o.pyramid_init = PyramidInit::algebraic;
    } else if (s.pyramid_init != "geometric") {
      throw UsageError("--pyramid-init must be geometric or algebraic");
    }
    if (!s.ct.empty()) {
      ReductionPlan plan = ReductionPlan::for_domain(d, q);
      try {
        plan.collapse_threshold = Real::parse(s.ct);
      } catch (const Error&) {
        throw UsageError("invalid --ct '" + s.ct + "'");
      }
      o.plan = plan;
    }
    return o;
  }
};

DomainKind domain_arg(const std::string& name) {
  try {
    return parse_domain(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void check_degree(DomainKind d, int q) {
  if (q < 1) throw UsageError("degree must be at least 1");
  if ((d == DomainKind::square || d == DomainKind::cube) && q % 2 == 0)
    throw UsageError("no even-degree fully symmetric rules exist on the " + std::string(to_string(d)));
}

std::string orbit_summary(const QuadRule& r) {
  std::ostringstream out;
  bool first = true;
  for (auto [s, n] : r.orbit_counts()) {
    out << (first ? "" : " ") << "S" << s << ":" << n;
    first = false;
  }
  return out.str();
}

std::string trace_csv(const EliminationTrace& t) {
  std::ostringstream out;
  out << "step,action,orbit,symmetry,target,accepted,status,residual,iterations\n";
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const auto& e = t.entries[i];
    out << i << "," << (e.action == TraceAction::eliminate ? "eliminate" : "collapse") << "," << e.orbit << ",S"
        << e.symmetry << "," << (e.target ? "S" + std::to_string(e.target) : "") << "," << (e.accepted ? 1 : 0) << ","
        << to_string(e.status) << "," << e.residual.to_string(6) << "," << e.iterations << "\n";
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

struct Generated {
  BuildResult build;
  Certificate cert;
};

Generated generate(const Context& ctx, DomainKind d, int q) {
  check_degree(d, q);
  Generated g{build_rule(d, q, ctx.build_options(d, q), ctx.aux), {}};
  g.cert = certify(g.build.reduced.rule, q);
  if (!g.cert.passed(ctx.solver.tolerance))
    throw CertificationFailure("generated rule failed certification (residual " + g.cert.residual.to_string(6) + ")");
  return g;
}

// Rule from --rule, else the catalog, else (when allowed) a fresh build.
QuadRule obtain_rule(const Context& ctx, DomainKind d, int q, const std::string& file, bool allow_generate) {
  if (!file.empty()) return read_rule(file).rule;
  const std::string root = ctx.catalog_root();
  if (!root.empty()) {
    if (auto r = Catalog(root).find(d, q)) return *r;
  }
  if (!allow_generate)
    throw MissingData("no " + std::string(to_string(d)) + " rule of degree " + std::to_string(q) +
                      (root.empty() ? " (no catalog configured)" : " in catalog " + root));
  QuadRule r = generate(ctx, d, q).build.reduced.rule;
  if (!root.empty()) Catalog(root).insert(r, ctx.solver.tolerance);
  return r;
}

std::vector<int> parse_k(const std::string& text) {
  std::vector<int> k;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      std::size_t used = 0;
      int v = std::stoi(part, &used);
      if (used != part.size() || v < 1) throw std::invalid_argument(part);
      k.push_back(v);
    } catch (const std::logic_error&) {
      throw UsageError("--k expects positive whole numbers separated by commas");
    }
  }
  return k;
}

void add_common(CLI::App* cmd, Settings& s) {
  cmd->add_option("--mode", s.mode, "fast (113 bits, 1e-30) or full (256 bits, 1e-66)")->capture_default_str();
  cmd->add_option("--tolerance", s.tolerance, "residual tolerance override");
  cmd->add_option("--catalog", s.catalog, "catalog root (default $SPIQUAD_CATALOG)");
  cmd->add_option("--data", s.data, "triangle/tetrahedron data directory (default $SPIQUAD_DATA)");
  cmd->add_flag("--no-fallback", s.no_fallback, "do not generate missing triangle/tetrahedron rules");
  cmd->add_option("--pyramid-init", s.pyramid_init, "geometric or algebraic")->capture_default_str();
  cmd->add_option("--ct", s.ct, "collapse threshold override");
  cmd->add_flag("--no-restarts", s.no_restarts, "reduce with plain remove_nodes only");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fully symmetric positive interior quadrature rules", "spiquad"};
  app.require_subcommand(1);
  Settings s;
  std::string domain, rule_file, out_file, trace_file, k_text;
  int q = 0, q_max = 0, q_check = 0, levels = 6;
  long n_fixture = 0, n_triangle = 0, n_square = 0;
  bool expanded = false;

  auto* gen = app.add_subcommand("generate", "build, reduce, certify and store a rule");
  gen->add_option("domain", domain, "square, cube, prism or pyramid")->required();
  gen->add_option("degree", q)->required();
  gen->add_option("--out", out_file, "write the rule file here");
  gen->add_option("--trace", trace_file, "write the elimination trace (CSV) here");
  gen->add_flag("--expanded", expanded, "include the expanded node section");
  add_common(gen, s);

  auto* ver = app.add_subcommand("verify", "certify a rule file or catalog rule");
  std::vector<std::string> ver_args;
  ver->add_option("target", ver_args, "FILE, or DOMAIN DEGREE")->required()->expected(1, 2);
  ver->add_option("--degree", q_check, "degree to check (default: the rule's)");
  add_common(ver, s);

  auto* conv = app.add_subcommand("convergence", "oscillatory-integral refinement study (CSV)");
  conv->add_option("domain", domain)->required();
  conv->add_option("degree", q)->required();
  conv->add_option("--k", k_text, "wave numbers, e.g. 30,30")->required();
  conv->add_option("--levels", levels, "refinement levels (>= 3)")->capture_default_str();
  conv->add_option("--rule", rule_file, "rule file instead of the catalog");
  add_common(conv, s);

  auto* eff = app.add_subcommand("efficiency", "efficiency e = (n_r - n)/n_r over a degree range (CSV)");
  eff->add_option("domain", domain)->required();
  eff->add_option("degree", q)->required();
  eff->add_option("max_degree", q_max);
  eff->add_option("--n", n_fixture, "node count to evaluate instead of a rule (single degree)");
  eff->add_option("--n-triangle", n_triangle, "n_T(q) for the prism reference");
  eff->add_option("--n-square", n_square, "n_S(q) for the pyramid reference");
  add_common(eff, s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    PrecisionMode mode;
    try {
      mode = parse_mode(s.mode);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    PrecisionScope scope(mode_bits(mode));
    Context ctx(s);

    if (*gen) {
      DomainKind d = domain_arg(domain);
      Generated g = generate(ctx, d, q);
      const QuadRule& r = g.build.reduced.rule;
      out << "domain " << to_string(d) << "\n";
      out << "degree " << q << "\n";
      out << "mode " << s.mode << "\n";
      out << "init " << g.build.init_method << " " << g.build.initial.node_count() << "\n";
      out << "nodes " << r.node_count() << "\n";
      out << "residual " << g.cert.residual.to_string(6) << "\n";
      out << "orbits " << orbit_summary(r) << "\n";
      if (!out_file.empty()) write_rule(r, out_file, ctx.solver.tolerance, expanded);
      if (!trace_file.empty()) write_text(trace_file, trace_csv(g.build.reduced.trace));
      const std::string root = ctx.catalog_root();
      if (!root.empty()) out << "catalog " << (Catalog(root).insert(r, ctx.solver.tolerance) ? "stored" : "kept") << "\n";
      return kExitOk;
    }

    if (*ver) {
      QuadRule r;
      if (ver_args.size() == 1) {
        r = read_rule(ver_args[0]).rule;
      } else {
        DomainKind d = domain_arg(ver_args[0]);
        int deg = 0;
        try {
          deg = std::stoi(ver_args[1]);
        } catch (const std::logic_error&) {
          throw UsageError("degree must be an integer");
        }
        r = obtain_rule(ctx, d, deg, "", false);
      }
      PrecisionScope at(std::max(working_precision(), r.orbits.empty() ? 0 : r.orbits[0].weight.precision()));
      const int deg = q_check > 0 ? q_check : r.degree;
      Certificate c = certify(r, deg);
      out << "domain " << to_string(r.domain) << "\n";
      out << "degree " << r.degree << "\n";
      out << "checked_degree " << deg << "\n";
      out << "nodes " << r.node_count() << "\n";
      out << "residual " << c.residual.to_string(6) << "\n";
      out << "positive " << (c.positive ? "yes" : "no") << "\n";
      out << "interior " << (c.interior ? "yes" : "no") << "\n";
      out << "symmetric " << (c.symmetric ? "yes" : "no") << "\n";
      const bool pass = c.passed(ctx.solver.tolerance);
      out << "result " << (pass ? "pass" : "fail") << "\n";
      return pass ? kExitOk : kExitCertification;
    }

    if (*conv) {
      DomainKind d = domain_arg(domain);
      if (!is_target_domain(d)) throw UsageError("convergence studies run on the square, cube, prism or pyramid");
      std::vector<int> k = parse_k(k_text);
      if (static_cast<int>(k.size()) != dimension(d)) throw UsageError("--k needs one wave number per dimension");
      if (levels < 3) throw UsageError("--levels must be at least 3");
      QuadRule r = obtain_rule(ctx, d, q, rule_file, true);
      ConvergenceReport rep = convergence_study(r, k, levels);
      out << convergence_csv(rep);
      const double rate = rep.require_rate();
      if (rate < r.degree + 1) {
        err << "final rate " << rate << " is below q+1 = " << r.degree + 1 << "\n";
        return kExitRateViolation;
      }
      return kExitOk;
    }

    if (*eff) {
      DomainKind d = domain_arg(domain);
      if (!is_target_domain(d)) throw UsageError("efficiency is defined on the square, cube, prism and pyramid");
      if (q_max == 0) q_max = q;
      if (q_max < q) throw UsageError("max_degree is below degree");
      if (n_fixture > 0 && q_max != q) throw UsageError("--n applies to a single degree");
      std::vector<EfficiencyReport> rows;
      for (int deg = q; deg <= q_max; ++deg) {
        if ((d == DomainKind::square || d == DomainKind::cube) && deg % 2 == 0) continue;
        AuxCounts counts;
        if (d == DomainKind::prism) {
          counts.triangle = n_triangle > 0 ? n_triangle : static_cast<long>(ctx.aux(DomainKind::triangle, deg).rule.node_count());
        }
        if (d == DomainKind::pyramid) {
          counts.square = n_square > 0 ? n_square
                                       : static_cast<long>(obtain_rule(ctx, DomainKind::square, deg % 2 ? deg : deg + 1,
                                                                       "", true).node_count());
        }
        const long n = n_fixture > 0 ? n_fixture : static_cast<long>(obtain_rule(ctx, d, deg, "", true).node_count());
        rows.push_back(efficiency(deg, n, d, counts));
      }
      out << efficiency_csv(rows);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const VersionError& e) {
    err << "version error: " << e.what() << "\n";
    return kExitVersion;
  } catch (const CertificationFailure& e) {
    err << "certification failure: " << e.what() << "\n";
    return kExitCertification;
  } catch (const SolveFailed& e) {
    err << "solve failed: " << e.what() << "\n";
    return kExitSolveFailed;
  } catch (const MissingData& e) {
    err << "missing data: " << e.what() << "\n";
    return kExitMissingData;
  } catch (const PrecisionFloor& e) {
    err << "precision floor: " << e.what() << "\n";
    return kExitPrecisionFloor;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}

}  // namespace spiquad
