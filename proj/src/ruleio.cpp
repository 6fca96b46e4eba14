#include "spiquad/ruleio.hpp"

#include "json.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spiquad {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
  std::string body = line.substr(0, line.find('#'));
  std::istringstream in(body);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingData("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

int decimal_digits(int bits) { return static_cast<int>(std::ceil(bits * std::log10(2.0))) + 1; }

// Significant digits in a decimal literal.
int significant_digits(const std::string& t) {
  int n = 0;
  bool leading = true;
  for (char c : t) {
    if (c == 'e' || c == 'E') break;
    if (c < '0' || c > '9') continue;
    if (leading && c == '0') continue;
    leading = false;
    ++n;
  }
  return n;
}

Real parse_number(const std::string& t, int line) {
  try {
    return Real::parse(t);
  } catch (const ParseError&) {
    throw ParseError("malformed number '" + t + "'", line);
  }
}

int parse_int(const std::string& t, int line) {
  try {
    std::size_t used = 0;
    int v = std::stoi(t, &used);
    if (used != t.size()) throw ParseError("malformed integer '" + t + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("malformed integer '" + t + "'", line);
  }
}

// Exclusive or shared flock on the catalog lock file for the lifetime.
class FileLock {
public:
  FileLock(const fs::path& path, bool exclusive) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw Error("cannot open lock " + path.string());
    if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      ::close(fd_);
      throw Error("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

private:
  int fd_ = -1;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string format_rule(const QuadRule& rule, bool expanded) {
  const int bits = working_precision();
  const Real res = residual(rule, ObjectiveBasis(rule.domain, rule.degree));
  std::ostringstream out;
  out << "# spiquad rule\n";
  out << "format " << kRuleFormatVersion << "\n";
  out << "domain " << to_string(rule.domain) << "\n";
  out << "degree " << rule.degree << "\n";
  out << "nodes " << rule.node_count() << "\n";
  out << "precision " << bits << "\n";
  out << "residual " << res.to_string(6) << "\n";
  out << "orbits " << rule.orbits.size() << "\n";
  for (const auto& o : rule.orbits) {
    out << "S" << o.symmetry;
    for (const auto& p : o.params) out << " " << p.to_string();
    out << " " << o.weight.to_string() << "\n";
  }
  if (expanded) {
    const int digits = decimal_digits(bits);
    const auto nodes = expand_rule(rule);
    out << "expanded " << nodes.size() << "\n";
    for (const auto& n : nodes) {
      for (const auto& x : n.x) out << x.to_string(digits) << " ";
      out << n.w.to_string(digits) << "\n";
    }
  }
  return out.str();
}

RuleFile parse_rule(const std::string& text) {
  std::vector<std::pair<int, std::vector<std::string>>> lines;
  {
    std::istringstream in(text);
    int no = 0;
    for (std::string line; std::getline(in, line);) {
      ++no;
      auto t = tokens_of(line);
      if (!t.empty()) lines.push_back({no, std::move(t)});
    }
  }
  std::size_t at = 0;
  auto next = [&](const char* key) -> const std::vector<std::string>& {
    if (at >= lines.size()) throw ParseError(std::string("missing '") + key + "'", lines.empty() ? 0 : lines.back().first);
    const auto& [no, t] = lines[at];
    if (t[0] != key) throw ParseError(std::string("expected '") + key + "', found '" + t[0] + "'", no);
    if (t.size() != 2) throw ParseError(std::string("'") + key + "' takes one value", no);
    ++at;
    return t;
  };

  RuleFile f;
  f.version = parse_int(next("format")[1], lines[at - 1].first);
  if (f.version != kRuleFormatVersion)
    throw VersionError("rule format " + std::to_string(f.version) + " is not supported (expected " +
                       std::to_string(kRuleFormatVersion) + ")");
  try {
    f.rule.domain = parse_domain(next("domain")[1]);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), lines[at - 1].first);
  }
  f.rule.degree = parse_int(next("degree")[1], lines[at - 1].first);
  const int nodes = parse_int(next("nodes")[1], lines[at - 1].first);
  const int nodes_line = lines[at - 1].first;
  f.precision_bits = parse_int(next("precision")[1], lines[at - 1].first);
  if (f.precision_bits < 53 || f.precision_bits > 4096) throw ParseError("unsupported precision", lines[at - 1].first);
  PrecisionScope scope(f.precision_bits);
  f.residual = parse_number(next("residual")[1], lines[at - 1].first);
  const int count = parse_int(next("orbits")[1], lines[at - 1].first);

  for (int k = 0; k < count; ++k) {
    if (at >= lines.size())
      throw ParseError("expected " + std::to_string(count) + " orbit lines, found " + std::to_string(k),
                       lines.back().first);
    const auto& [no, t] = lines[at++];
    int sym = 0;
    try {
      sym = parse_symmetry_label(f.rule.domain, t[0]);
    } catch (const Error& e) {
      throw ParseError(e.what(), no);
    }
    const auto& cls = symmetry_class(f.rule.domain, sym);
    if (t.size() != static_cast<std::size_t>(cls.param_count) + 2)
      throw ParseError(cls.label() + " needs " + std::to_string(cls.param_count) + " parameters and a weight", no);
    Orbit o;
    o.symmetry = sym;
    for (int i = 0; i < cls.param_count; ++i) o.params.push_back(parse_number(t[static_cast<std::size_t>(i) + 1], no));
    o.weight = parse_number(t.back(), no);
    f.rule.orbits.push_back(std::move(o));
  }
  if (static_cast<long>(f.rule.node_count()) != nodes)
    throw ParseError("header states " + std::to_string(nodes) + " nodes, orbits give " +
                         std::to_string(f.rule.node_count()),
                     nodes_line);
  for (const auto& o : f.rule.orbits) {
    if (!params_valid(o.params)) throw CertificationFailure("orbit parameter outside (0, 1): node not interior");
  }

  if (at < lines.size()) {
    const auto& head = lines[at];
    const int m = parse_int(next("expanded")[1], head.first);
    if (m != nodes) throw ParseError("expanded section size differs from the node count", head.first);
    const auto expected = expand_rule(f.rule);
    const std::size_t dim = static_cast<std::size_t>(dimension(f.rule.domain));
    const Real tol = pow2(-(f.precision_bits - 16));
    for (int k = 0; k < m; ++k) {
      if (at >= lines.size()) throw ParseError("truncated expanded section", lines.back().first);
      const auto& [no, t] = lines[at++];
      if (t.size() != dim + 1) throw ParseError("expanded line needs " + std::to_string(dim + 1) + " columns", no);
      const auto& e = expected[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < dim; ++i) {
        if (abs(parse_number(t[i], no) - e.x[i]) > tol) throw ParseError("expanded node differs from its orbit", no);
      }
      if (abs(parse_number(t[dim], no) - e.w) > tol) throw ParseError("expanded weight differs from its orbit", no);
    }
    f.expanded = true;
  }
  if (at < lines.size()) throw ParseError("unexpected trailing content", lines[at].first);

  Certificate c = certify(f.rule, f.rule.degree);
  const Real allowed = Real(10) * max(f.residual, pow2(-f.precision_bits));
  if (!c.positive) throw CertificationFailure("rule has a non-positive weight");
  if (!c.interior) throw CertificationFailure("rule has a node outside the open domain");
  if (!c.symmetric) throw CertificationFailure("rule is not fully symmetric");
  if (c.residual > allowed)
    throw CertificationFailure("residual " + c.residual.to_string(6) + " at degree " + std::to_string(f.rule.degree) +
                               " exceeds the stated " + f.residual.to_string(6) + " by more than 10x");
  return f;
}

void write_rule(const QuadRule& rule, const fs::path& path, const Real& tolerance, bool expanded) {
  Certificate c = certify(rule, rule.degree);
  if (!c.passed(tolerance))
    throw CertificationFailure("refusing to write an uncertified rule (residual " + c.residual.to_string(6) + ")");
  write_atomic(path, format_rule(rule, expanded));
}

RuleFile read_rule(const fs::path& path) {
  if (!fs::exists(path)) throw MissingData("no rule file at " + path.string());
  return parse_rule(slurp(path));
}

ExternalRuleData ingest_external(const fs::path& path, DomainKind d, int degree, const IngestOptions& options) {
  const std::string text = slurp(path);
  const std::size_t dim = static_cast<std::size_t>(dimension(d));
  std::vector<Node> nodes;
  int digits = 0;
  std::istringstream in(text);
  int no = 0;
  for (std::string line; std::getline(in, line);) {
    ++no;
    auto t = tokens_of(line);
    if (t.empty()) continue;
    if (t.size() != dim + 1)
      throw ParseError("expected " + std::to_string(dim + 1) + " columns, found " + std::to_string(t.size()), no);
    Node n;
    for (std::size_t i = 0; i < dim; ++i) n.x.push_back(parse_number(t[i], no));
    n.w = parse_number(t[dim], no);
    for (const auto& s : t) digits = std::max(digits, significant_digits(s));
    if (!(n.w > Real(0))) throw CertificationFailure("positivity: weight on line " + std::to_string(no) + " is not positive");
    if (!contains(d, n.x)) throw CertificationFailure("interiority: node on line " + std::to_string(no) + " is not interior");
    nodes.push_back(std::move(n));
  }
  if (nodes.empty()) throw ParseError("no nodes in " + path.string());

  Real tol;
  if (options.tolerance) {
    tol = *options.tolerance;
  } else {
    tol = max(pow(Real(10), -std::max(digits - 4, 1)), pow2(-(working_precision() - 16)));
  }
  QuadRule rule = compress_nodes(nodes, d, tol, degree);
  const Real res = residual(rule, ObjectiveBasis(d, degree));
  if (res > tol)
    throw CertificationFailure("residual " + res.to_string(6) + " at declared degree " + std::to_string(degree) +
                               " exceeds " + tol.to_string(3));
  if (options.polish) {
    SolveOutcome out = lma_solve(rule, ObjectiveBasis(d, degree), options.solver);
    if (!out.converged()) throw CertificationFailure("refinement of " + path.string() + " did not converge");
    rule = out.rule;
  }
  return {rule, "file:" + path.filename().string()};
}

AuxRuleSource data_aux_source(const fs::path& dir, AuxRuleSource fallback, IngestOptions options) {
  return [dir, fallback = std::move(fallback), options](DomainKind d, int q) {
    for (int deg = q; deg <= q + 4; ++deg) {
      fs::path p = dir / (std::string(to_string(d)) + "-" + std::to_string(deg) + ".txt");
      if (fs::exists(p)) return ingest_external(p, d, deg, options);
    }
    if (fallback) return fallback(d, q);
    throw MissingData("no " + std::string(to_string(d)) + " rule of degree >= " + std::to_string(q) + " in " +
                      dir.string());
  };
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Catalog::Catalog(fs::path root) : root_(std::move(root)) {}

namespace {

std::vector<CatalogEntry> load_manifest(const fs::path& root) {
  const fs::path m = root / "manifest.json";
  std::vector<CatalogEntry> out;
  if (!fs::exists(m)) return out;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(m));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (j.value("format", 0) != kRuleFormatVersion) throw VersionError("unsupported catalog manifest format");
  for (const auto& r : j.at("rules")) {
    out.push_back({parse_domain(r.at("domain").get<std::string>()), r.at("degree").get<int>(),
                   r.at("nodes").get<long>(), r.at("file").get<std::string>(), r.at("fnv1a").get<std::string>()});
  }
  return out;
}

void store_manifest(const fs::path& root, std::vector<CatalogEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
    return std::tie(a.domain, a.degree) < std::tie(b.domain, b.degree);
  });
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& e : entries) {
    rules.push_back({{"domain", to_string(e.domain)}, {"degree", e.degree}, {"nodes", e.nodes}, {"file", e.file},
                     {"fnv1a", e.checksum}});
  }
  nlohmann::json j{{"format", kRuleFormatVersion}, {"rules", rules}};
  write_atomic(root / "manifest.json", j.dump(2) + "\n");
}

}  // namespace

std::vector<CatalogEntry> Catalog::entries() const {
  if (!fs::exists(root_)) return {};
  FileLock lock(root_ / ".lock", false);
  return load_manifest(root_);
}

std::optional<CatalogEntry> Catalog::entry(DomainKind d, int degree) const {
  for (auto& e : entries()) {
    if (e.domain == d && e.degree == degree) return e;
  }
  return std::nullopt;
}

std::optional<QuadRule> Catalog::find(DomainKind d, int degree) const {
  auto e = entry(d, degree);
  if (!e) return std::nullopt;
  const std::string text = slurp(root_ / e->file);
  if (hex64(fnv1a(text)) != e->checksum)
    throw CertificationFailure("checksum mismatch for " + e->file);
  return parse_rule(text).rule;
}

bool Catalog::insert(const QuadRule& rule, const Real& tolerance) {
  Certificate c = certify(rule, rule.degree);
  if (!c.passed(tolerance)) throw CertificationFailure("refusing to catalog an uncertified rule");
  fs::create_directories(root_);
  FileLock lock(root_ / ".lock", true);
  auto entries = load_manifest(root_);
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const CatalogEntry& e) { return e.domain == rule.domain && e.degree == rule.degree; });
  const long n = static_cast<long>(rule.node_count());
  if (it != entries.end() && it->nodes <= n) return false;
  char name[32];
  std::snprintf(name, sizeof name, "q%02d.rule", rule.degree);
  const std::string file = std::string(to_string(rule.domain)) + "/" + name;
  const std::string text = format_rule(rule);
  write_atomic(root_ / file, text);
  CatalogEntry e{rule.domain, rule.degree, n, file, hex64(fnv1a(text))};
  if (it != entries.end()) {
    *it = e;
  } else {
    entries.push_back(e);
  }
  store_manifest(root_, entries);
  return true;
}

std::string convergence_csv(const ConvergenceReport& report) {
  std::ostringstream out;
  out << "level,error,rate\n";
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    out << report.levels[i] << "," << report.errors[i].to_string(6) << ",";
    if (report.rates[i]) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *report.rates[i]);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string efficiency_csv(const std::vector<EfficiencyReport>& rows) {
  std::ostringstream out;
  out << "q,n,n_ref,e\n";
  for (const auto& r : rows) out << r.q << "," << r.n << "," << r.n_ref << "," << r.e.to_string(12) << "\n";
  return out.str();
}

}  // namespace spiquad
