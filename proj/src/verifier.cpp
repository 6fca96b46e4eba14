#include "spiquad/verifier.hpp"

#include <algorithm>
#include <cmath>

namespace spiquad {

namespace {

// Nodes sorted by their first coordinate for windowed matching.
struct NodeIndex {
  std::vector<Node> nodes;
  std::vector<double> keys;

  explicit NodeIndex(std::vector<Node> n) : nodes(std::move(n)) {
    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.x[0] < b.x[0]; });
    for (const auto& m : nodes) keys.push_back(m.x[0].to_double());
  }

  bool contains(const Node& probe, const Real& tol) const {
    const double k = probe.x[0].to_double();
    auto it = std::lower_bound(keys.begin(), keys.end(), k - 1e-9);
    for (auto i = static_cast<std::size_t>(it - keys.begin()); i < nodes.size() && keys[i] <= k + 1e-9; ++i) {
      if (distance(nodes[i].x, probe.x) <= tol && abs(nodes[i].w - probe.w) <= tol) return true;
    }
    return false;
  }
};

using Matrix3 = std::vector<std::vector<Real>>;

Matrix3 scaled(const std::array<std::array<int, 3>, 3>& p, int dim, const Real& h, const Real& last) {
  Matrix3 a(static_cast<std::size_t>(dim), std::vector<Real>(static_cast<std::size_t>(dim), Real(0)));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      if (p[i][j] == 0) continue;
      a[i][j] = Real(p[i][j]) * h;
      if (j == dim - 1) a[i][j] *= last;
    }
  return a;
}

}  // namespace

Certificate certify(const QuadRule& rule, int degree) {
  Certificate c;
  c.degree = degree;
  c.residual = residual(rule, ObjectiveBasis(rule.domain, degree));
  std::vector<Node> nodes;
  try {
    nodes = expand_rule(rule);
  } catch (const DegenerateOrbit&) {
    return c;
  }
  c.positive = std::all_of(nodes.begin(), nodes.end(), [](const Node& n) { return n.w > Real(0); });
  c.interior = std::all_of(nodes.begin(), nodes.end(), [&](const Node& n) { return contains(rule.domain, n.x); });
  const Real tol = pow2(-(working_precision() - 16));
  NodeIndex index(nodes);
  c.symmetric = true;
  for (const auto& g : symmetry_group(rule.domain)) {
    for (const auto& n : nodes) {
      if (!index.contains({g.apply(n.x), n.w}, tol)) {
        c.symmetric = false;
        return c;
      }
    }
  }
  return c;
}

Real exact_oscillatory(std::span<const int> k) {
  Real v(1);
  for (int ki : k) {
    if (ki < 1) throw Error("oscillatory wave numbers must be positive whole numbers");
    v *= Real(2) * sin(Real(ki)) / Real(ki);
  }
  return v;
}

Mesh uniform_mesh(DomainKind d, int level) {
  if (!is_target_domain(d)) throw Error("no mesh builder for the " + std::string(to_string(d)));
  if (level < 0) throw Error("mesh level must be non-negative");
  Mesh mesh{d, level, {}};
  const int dim = dimension(d);
  const long cells = 1L << level;
  const Real h = Real(1) / Real(cells);

  using P = std::array<std::array<int, 3>, 3>;
  std::vector<P> maps;
  Real last(1), shift(0), det(1);
  for (int i = 0; i < dim; ++i) det *= h;
  switch (d) {
    case DomainKind::prism:
      maps = {P{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, P{{{-1, 0, 0}, {0, -1, 0}, {0, 0, 1}}}};
      break;
    case DomainKind::pyramid:
      // Each map sends the reference base normal -e3 to one face normal.
      maps = {P{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}},   P{{{1, 0, 0}, {0, -1, 0}, {0, 0, -1}}},
              P{{{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}},   P{{{0, 0, -1}, {1, 0, 0}, {0, -1, 0}}},
              P{{{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}},   P{{{0, 1, 0}, {0, 0, -1}, {-1, 0, 0}}}};
      last = Real(1) / Real(2);
      shift = -Real(1) / Real(2);
      det /= Real(2);
      break;
    default:
      maps = {P{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}};
      break;
  }

  const long total = dim == 2 ? cells * cells : cells * cells * cells;
  mesh.elements.reserve(static_cast<std::size_t>(total) * maps.size());
  for (long c = 0; c < total; ++c) {
    Point centre(static_cast<std::size_t>(dim));
    long rest = c;
    for (int i = 0; i < dim; ++i) {
      centre[static_cast<std::size_t>(i)] = Real(-1) + Real(2 * (rest % cells) + 1) * h;
      rest /= cells;
    }
    for (const auto& p : maps) {
      Element e{centre, scaled(p, dim, h, last), det};
      if (!shift.is_zero()) {
        for (int i = 0; i < dim; ++i) {
          if (p[i][dim - 1] != 0) e.offset[static_cast<std::size_t>(i)] += Real(p[i][dim - 1]) * h * shift;
        }
      }
      mesh.elements.push_back(std::move(e));
    }
  }
  return mesh;
}

Real integrate_on_mesh(const QuadRule& rule, const Mesh& mesh, const Integrand& f) {
  if (rule.domain != mesh.domain) throw Error("rule and mesh domains differ");
  const auto nodes = expand_rule(rule);
  const std::size_t dim = static_cast<std::size_t>(dimension(rule.domain));
  Real total(0);
  Point x(dim);
  for (const auto& e : mesh.elements) {
    Real local(0);
    for (const auto& n : nodes) {
      for (std::size_t i = 0; i < dim; ++i) {
        x[i] = e.offset[i];
        for (std::size_t j = 0; j < dim; ++j) {
          if (!e.a[i][j].is_zero()) x[i] += e.a[i][j] * n.x[j];
        }
      }
      local += n.w * f(x);
    }
    total += e.det * local;
  }
  return total;
}

std::optional<double> ConvergenceReport::final_rate() const {
  for (std::size_t i = rates.size(); i-- > 0;) {
    if (rates[i]) return rates[i];
  }
  return std::nullopt;
}

double ConvergenceReport::require_rate() const {
  auto r = final_rate();
  if (!r) throw PrecisionFloor("no two refinement levels lie above the precision floor");
  return *r;
}

ConvergenceReport convergence_study(const QuadRule& rule, std::span<const int> k, int levels) {
  if (levels < 3) throw Error("a convergence study needs at least 3 levels");
  if (k.size() != static_cast<std::size_t>(dimension(rule.domain)))
    throw Error("wave vector length does not match the domain dimension");
  PrecisionScope scope(std::max(working_precision(), 113));
  ConvergenceReport report;
  report.exact = exact_oscillatory(k);
  report.floor = Real(10) * pow2(-working_precision());
  std::vector<Real> kr(k.begin(), k.end());
  Integrand f = [&kr](const Point& x) {
    Real phase(0);
    for (std::size_t i = 0; i < kr.size(); ++i) phase += kr[i] * x[i];
    return cos(phase);
  };
  for (int level = 0; level < levels; ++level) {
    Real err = abs(integrate_on_mesh(rule, uniform_mesh(rule.domain, level), f) - report.exact);
    std::optional<double> rate;
    if (level > 0 && report.errors.back() > report.floor && err > report.floor)
      rate = std::log2((report.errors.back() / err).to_double());
    report.levels.push_back(level);
    report.errors.push_back(std::move(err));
    report.rates.push_back(rate);
  }
  return report;
}

long reference_node_count(DomainKind d, int q, const AuxCounts& aux) {
  if (q < 1) throw Error("degree must be at least 1");
  const long a = (q + 2) / 2;
  switch (d) {
    case DomainKind::square: return a * a;
    case DomainKind::cube: return a * a * a;
    case DomainKind::prism:
      if (!aux.triangle) throw MissingData("prism efficiency needs the triangle node count n_T(" + std::to_string(q) + ")");
      return a * *aux.triangle;
    case DomainKind::pyramid:
      if (!aux.square) throw MissingData("pyramid efficiency needs the square node count n_S(" + std::to_string(q) + ")");
      return static_cast<long>((q + 4) / 2) * *aux.square;
    default:
      throw Error("no efficiency reference for the " + std::string(to_string(d)));
  }
}

EfficiencyReport efficiency(int q, long n, DomainKind d, const AuxCounts& aux) {
  EfficiencyReport r;
  r.q = q;
  r.n = n;
  r.n_ref = reference_node_count(d, q, aux);
  r.e = Real(r.n_ref - n) / Real(r.n_ref);
  return r;
}

}  // namespace spiquad
