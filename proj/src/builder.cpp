#include "spiquad/builder.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <tuple>

namespace spiquad {

namespace {

const ObjectiveBasis& objective(DomainKind d, int q) {
  thread_local std::map<std::tuple<int, int, int>, std::unique_ptr<ObjectiveBasis>> cache;
  auto key = std::make_tuple(static_cast<int>(d), q, working_precision());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<ObjectiveBasis>(d, q)).first;
  return *it->second;
}

Real sym_priority(const std::vector<int>& syms, const std::vector<Real>& prios, int s) {
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (syms[i] == s) return i < prios.size() ? prios[i] : Real(1);
  }
  return Real(1);
}

bool has_center(const QuadRule& rule) {
  return std::any_of(rule.orbits.begin(), rule.orbits.end(), [](const Orbit& o) { return o.symmetry == 1; });
}

std::vector<Node> tensor_nodes(int dim, const Rule1D& g) {
  std::vector<Node> nodes;
  const std::size_t n = g.nodes.size();
  const std::size_t total = dim == 2 ? n * n : n * n * n;
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t i = k % n, j = (k / n) % n, l = k / (n * n);
    Node node;
    node.x = {g.nodes[i], g.nodes[j]};
    node.w = g.weights[i] * g.weights[j];
    if (dim == 3) {
      node.x.push_back(g.nodes[l]);
      node.w *= g.weights[l];
    }
    nodes.push_back(std::move(node));
  }
  return nodes;
}

// Applies every group element to every node and merges coincident images.
std::vector<Node> symmetrize(const std::vector<Node>& nodes, DomainKind d, bool average_weights) {
  const auto& group = symmetry_group(d);
  const Real tol = coincidence_tolerance();
  const Real share = average_weights ? Real(1) / Real(static_cast<long>(group.size())) : Real(1);
  std::vector<Node> out;
  for (const auto& node : nodes) {
    for (const auto& g : group) {
      Point x = g.apply(node.x);
      auto hit = std::find_if(out.begin(), out.end(), [&](const Node& m) { return distance(m.x, x) <= tol; });
      if (hit == out.end()) {
        out.push_back({std::move(x), node.w * share});
      } else if (average_weights) {
        hit->w += node.w * share;
      }
    }
  }
  return out;
}

void record(EliminationTrace* trace, TraceAction action, int pos, int sym, int target, const SolveOutcome& out) {
  if (!trace) return;
  trace->entries.push_back(
      {action, pos, sym, target, out.converged(), out.status, out.final_residual(), out.iterations});
}

int max_param_count(DomainKind d) {
  int m = 0;
  for (const auto& c : symmetry_classes(d)) m = std::max(m, c.param_count);
  return m;
}

// One bundle per parameter count, largest first, all priorities 1.
ReductionPlan uniform_plan(DomainKind d) {
  ReductionPlan plan;
  for (int pc = max_param_count(d); pc >= 0; --pc) {
    std::vector<int> bundle;
    for (const auto& c : symmetry_classes(d)) {
      if (c.param_count == pc) bundle.push_back(c.index);
    }
    if (bundle.empty()) continue;
    plan.bundles.push_back(bundle);
    plan.priorities.emplace_back(bundle.size(), Real(1));
  }
  plan.collapse_threshold = Real(1);
  return plan;
}

SolveOutcome certify_solve(const QuadRule& rule, const SolverConfig& config) {
  return lma_solve(rule, objective(rule.domain, rule.degree), config);
}

}  // namespace

ReductionPlan ReductionPlan::for_domain(DomainKind d, int q) {
  const Real e5 = Real(100000), e10 = Real(10000000000LL);
  ReductionPlan plan;
  switch (d) {
    case DomainKind::square:
    case DomainKind::pyramid:
      plan.bundles = {{4}, {3, 2}, {1}};
      plan.priorities = {{Real(1)}, {e5, Real(1)}, {Real(1)}};
      break;
    case DomainKind::cube:
      plan.bundles = {{7}, {6, 5}, {4, 3, 2}, {1}};
      plan.priorities = {{Real(1)}, {e5, Real(1)}, {Real(1), e5, e10}, {Real(1)}};
      break;
    case DomainKind::prism:
      plan.bundles = {{6}, {5, 4}, {3, 2}, {1}};
      plan.priorities = {{Real(1)}, {Real(1), e5}, {Real(1), e5}, {Real(1)}};
      break;
    default:
      plan = uniform_plan(d);
      break;
  }
  if (!is_target_domain(d)) return plan;
  const int cutoff = d == DomainKind::square ? 31 : 20;
  plan.collapse_threshold = q < cutoff ? Real::parse("0.25") : Real::parse("0.1");
  return plan;
}

Real ReductionPlan::priority_of(int symmetry) const {
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    for (std::size_t i = 0; i < bundles[b].size(); ++i) {
      if (bundles[b][i] == symmetry) return priorities[b][i];
    }
  }
  return Real(1);
}

QuadRule init_square(int q) {
  const Rule1D g = gauss_legendre(min_odd_gauss_points(q), working_precision());
  return compress_nodes(tensor_nodes(2, g), DomainKind::square, coincidence_tolerance(), q);
}

QuadRule init_cube(int q) {
  const Rule1D g = gauss_legendre(min_odd_gauss_points(q), working_precision());
  return compress_nodes(tensor_nodes(3, g), DomainKind::cube, coincidence_tolerance(), q);
}

QuadRule add_center(const QuadRule& rule, const SolverConfig& config) {
  if (has_center(rule)) return rule;
  Real smallest = rule.orbits.front().weight;
  for (const auto& o : rule.orbits) smallest = min(smallest, o.weight);
  QuadRule seeded = rule;
  const Real wc = smallest / Real(2);
  const Real keep = (volume(rule.domain) - wc) / volume(rule.domain);
  for (auto& o : seeded.orbits) o.weight *= keep;
  seeded.orbits.insert(seeded.orbits.begin(), Orbit{1, {}, wc});
  SolveOutcome out = certify_solve(seeded, config);
  if (!out.converged())
    throw SolveFailed("adding the center to a " + std::string(to_string(rule.domain)) + " rule ended " +
                      std::string(to_string(out.status)));
  return out.rule;
}

QuadRule init_prism(int q, const ExternalRuleData& tri, const SolverConfig& config) {
  if (tri.rule.domain != DomainKind::triangle || tri.rule.degree < q)
    throw MissingData("prism degree " + std::to_string(q) + " needs a triangle rule of that degree");
  const QuadRule t = add_center(tri.rule, config);
  const Rule1D g = gauss_legendre(min_odd_gauss_points(q), working_precision());
  std::vector<Node> nodes;
  for (const auto& tn : expand_rule(t)) {
    for (std::size_t e = 0; e < g.nodes.size(); ++e) {
      nodes.push_back({{tn.x[0], tn.x[1], g.nodes[e]}, tn.w * g.weights[e]});
    }
  }
  return compress_nodes(nodes, DomainKind::prism, coincidence_tolerance(), q);
}

QuadRule init_pyramid_algebraic(int q, const QuadRule& sq, const SolverConfig& config) {
  if (sq.domain != DomainKind::square || sq.degree < q)
    throw MissingData("pyramid degree " + std::to_string(q) + " needs a square rule of that degree");
  const QuadRule s = add_center(sq, config);
  const Rule1D g = gauss_legendre(min_gauss_points(q + 2), working_precision());
  std::vector<Node> nodes;
  for (std::size_t e = 0; e < g.nodes.size(); ++e) {
    const Real a = (Real(1) - g.nodes[e]) / Real(2);
    for (const auto& sn : expand_rule(s)) {
      nodes.push_back({{a * sn.x[0], a * sn.x[1], g.nodes[e]}, a * a * sn.w * g.weights[e]});
    }
  }
  return compress_nodes(nodes, DomainKind::pyramid, coincidence_tolerance(), q);
}

QuadRule pyramid_geometric_seed(int q, const ExternalRuleData& tri, const ExternalRuleData& tet) {
  if (tri.rule.domain != DomainKind::triangle || tri.rule.degree < q)
    throw MissingData("geometric pyramid degree " + std::to_string(q) + " needs a triangle rule of that degree");
  if (tet.rule.domain != DomainKind::tetrahedron || tet.rule.degree < q - 2)
    throw MissingData("geometric pyramid degree " + std::to_string(q) + " needs a tetrahedron rule of degree " +
                      std::to_string(q - 2));
  const Real one(1), half = Real(1) / Real(2);
  std::vector<Point> pts;
  // Triangle onto the slice x = 0 with vertices (y, z) = (-1,-1), (1,-1), (0,1).
  for (const auto& n : expand_rule(tri.rule)) {
    const Real lb = (n.x[0] + one) * half, lc = (n.x[1] + one) * half;
    const Real la = one - lb - lc;
    pts.push_back({Real(0), lb - la, lc - la - lb});
  }
  // Tetrahedron onto the half pyramid x + y > 0.
  for (const auto& n : expand_rule(tet.rule)) {
    const Real l1 = (n.x[0] + one) * half, l2 = (n.x[1] + one) * half, l3 = (n.x[2] + one) * half;
    const Real l0 = one - l1 - l2 - l3;
    pts.push_back({-l0 + l1 + l2, l0 + l1 - l2, -l0 - l1 - l2 + l3});
  }
  std::vector<Node> sector;
  for (auto& p : pts) {
    if (p[0] >= Real(0) && p[0] <= p[1] && abs(p[2]) < one) sector.push_back({std::move(p), Real(1)});
  }
  std::vector<Node> nodes = symmetrize(sector, DomainKind::pyramid, false);
  const Real w = volume(DomainKind::pyramid) / Real(static_cast<long>(nodes.size()));
  for (auto& n : nodes) n.w = w;
  return compress_nodes(nodes, DomainKind::pyramid, coincidence_tolerance(), q);
}

QuadRule init_pyramid_geometric(int q, const ExternalRuleData& tri, const ExternalRuleData& tet,
                                const SolverConfig& config) {
  SolveOutcome out = certify_solve(pyramid_geometric_seed(q, tri, tet), config);
  if (!out.converged())
    throw SolveFailed("geometric pyramid initialization of degree " + std::to_string(q) + " ended " +
                      std::string(to_string(out.status)));
  return out.rule;
}

std::vector<Node> init_pyramid_duffy(const QuadRule& cube) {
  std::vector<Node> nodes;
  for (const auto& n : expand_rule(cube)) {
    const Real a = (Real(1) - n.x[2]) / Real(2);
    nodes.push_back({{a * n.x[0], a * n.x[1], n.x[2]}, a * a * n.w});
  }
  return nodes;
}

Real orbit_priority(const Orbit& orbit, const Real& p, Parameterization mode, const Real& scale) {
  if (mode == Parameterization::cartesian) return p * orbit.weight;
  return log(p) / scale + log(orbit.weight) / scale;
}

QuadRule remove_orbits(const QuadRule& rule, std::vector<int> symmetries, std::vector<Real> priorities,
                       const SolverConfig& config, EliminationTrace* trace) {
  QuadRule q = rule;
  std::vector<char> attempted(q.orbits.size(), 0);
  auto in_s = [&](int s) { return std::find(symmetries.begin(), symmetries.end(), s) != symmetries.end(); };
  while (q.orbits.size() > 1) {
    std::optional<std::size_t> target;
    Real best;
    for (std::size_t i = 0; i < q.orbits.size(); ++i) {
      if (attempted[i] || !in_s(q.orbits[i].symmetry)) continue;
      Real p = orbit_priority(q.orbits[i], sym_priority(symmetries, priorities, q.orbits[i].symmetry),
                              config.parameterization, config.scale);
      if (!target || p < best) {
        target = i;
        best = p;
      }
    }
    if (!target) break;

    QuadRule trial = q;
    trial.orbits.erase(trial.orbits.begin() + static_cast<std::ptrdiff_t>(*target));
    SolveOutcome out = certify_solve(trial, config);
    const int sym = q.orbits[*target].symmetry;
    record(trace, TraceAction::eliminate, static_cast<int>(*target), sym, 0, out);
    if (out.converged()) {
      q = std::move(out.rule);
      attempted.assign(q.orbits.size(), 0);
      continue;
    }
    attempted[*target] = 1;
    bool explored = true;
    for (std::size_t i = 0; i < q.orbits.size(); ++i) {
      if (q.orbits[i].symmetry == sym && !attempted[i]) explored = false;
    }
    if (explored) {
      auto it = std::find(symmetries.begin(), symmetries.end(), sym);
      const auto k = it - symmetries.begin();
      symmetries.erase(it);
      if (static_cast<std::size_t>(k) < priorities.size()) priorities.erase(priorities.begin() + k);
    }
  }
  return q;
}

QuadRule collapse_orbits(const QuadRule& rule, const std::vector<int>& symmetries, const ReductionPlan& plan,
                         const SolverConfig& config, EliminationTrace* trace) {
  QuadRule q = rule;
  const DomainKind d = q.domain;
  for (std::size_t pos = 0; pos < q.orbits.size(); ++pos) {
    const Orbit o = q.orbits[pos];
    if (std::find(symmetries.begin(), symmetries.end(), o.symmetry) == symmetries.end()) continue;
    const auto& from = symmetry_class(d, o.symmetry);
    if (from.param_count == 0) continue;

    struct Candidate {
      const SymmetryClass* cls;
      Projection proj;
      Real p;
    };
    std::vector<Candidate> candidates;
    const Point rep = chart(d, o.symmetry, o.params);
    for (const auto& c : symmetry_classes(d)) {
      if (c.param_count != from.param_count - 1) continue;
      try {
        Projection proj = project_to_symmetry(rep, c.index, d);
        if (proj.distance < plan.collapse_threshold) candidates.push_back({&c, std::move(proj), plan.priority_of(c.index)});
      } catch (const NoProjection&) {
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.p != b.p) return a.p < b.p;
      return a.cls->orbit_size < b.cls->orbit_size;
    });

    for (const auto& c : candidates) {
      QuadRule trial = q;
      const Real scale = Real(from.orbit_size) / Real(c.cls->orbit_size);
      trial.orbits[pos] = Orbit{c.cls->index, c.proj.params, o.weight * scale};
      SolveOutcome out = certify_solve(trial, config);
      record(trace, TraceAction::collapse, static_cast<int>(pos), o.symmetry, c.cls->index, out);
      if (out.converged()) {
        q = std::move(out.rule);
        break;
      }
    }
  }
  return q;
}

Reduction remove_nodes(const QuadRule& rule, const ReductionPlan& plan, const SolverConfig& config) {
  Reduction r{rule, {}};
  for (std::size_t i = 0; i < plan.bundles.size(); ++i) {
    r.rule = remove_orbits(r.rule, plan.bundles[i], plan.priorities[i], config, &r.trace);
    for (std::size_t j = 0; j <= i; ++j) r.rule = collapse_orbits(r.rule, plan.bundles[j], plan, config, &r.trace);
  }
  return r;
}

namespace {

std::vector<Node> simplex_seed(DomainKind d, int q) {
  return symmetrize(reference_quadrature(d, q), d, true);
}

const std::vector<double> kRestartSeeds{0.2, 0.4, 0.6, 0.8};

std::vector<Real> seeded(int count, double u) {
  return std::vector<Real>(static_cast<std::size_t>(count), Real(u));
}

// Accepts a converged trial and reduces it again with remove_nodes.
bool accept(Reduction& r, const QuadRule& trial, TraceAction action, int pos, int sym, int target,
            const ReductionPlan& plan, const SolverConfig& config) {
  SolveOutcome out = certify_solve(trial, config);
  record(&r.trace, action, pos, sym, target, out);
  if (!out.converged()) return false;
  Reduction next = remove_nodes(out.rule, plan, config);
  r.rule = std::move(next.rule);
  r.trace.entries.insert(r.trace.entries.end(), next.trace.entries.begin(), next.trace.entries.end());
  return true;
}

// Removes orbit i, moves its weight onto orbit j and re-seeds j.
bool reseeded_elimination(Reduction& r, const ReductionPlan& plan, const SolverConfig& config) {
  const DomainKind d = r.rule.domain;
  const std::size_t n = r.rule.orbits.size();
  if (n < 2) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Orbit& gone = r.rule.orbits[i];
    const Real mass = gone.weight * Real(symmetry_class(d, gone.symmetry).orbit_size);
    for (std::size_t j = 0; j < n; ++j) {
      const int pc = symmetry_class(d, r.rule.orbits[j].symmetry).param_count;
      if (j == i || pc == 0) continue;
      for (double u : kRestartSeeds) {
        QuadRule trial = r.rule;
        Orbit& o = trial.orbits[j];
        o.params = seeded(pc, u);
        o.weight += mass / Real(symmetry_class(d, o.symmetry).orbit_size);
        trial.orbits.erase(trial.orbits.begin() + static_cast<std::ptrdiff_t>(i));
        if (accept(r, trial, TraceAction::eliminate, static_cast<int>(i), gone.symmetry, 0, plan, config)) return true;
      }
    }
  }
  return false;
}

// Replaces one orbit by k seeded orbits of a smaller class with fewer nodes in
// total, or, when `equal` is set, by lower-parameter orbits with the same
// node total.
bool reseeded_collapse(Reduction& r, const ReductionPlan& plan, const SolverConfig& config, bool equal) {
  const DomainKind d = r.rule.domain;
  for (std::size_t pos = 0; pos < r.rule.orbits.size(); ++pos) {
    const Orbit o = r.rule.orbits[pos];
    const auto& from = symmetry_class(d, o.symmetry);
    for (const auto& c : symmetry_classes(d)) {
      if (c.orbit_size >= from.orbit_size && !equal) continue;
      if (equal && (c.param_count == 0 || c.param_count >= from.param_count)) continue;
      for (std::size_t k = 1; k <= kRestartSeeds.size(); ++k) {
        const int total = static_cast<int>(k) * c.orbit_size;
        if (equal ? total > from.orbit_size : total >= from.orbit_size) break;
        if (equal && (k < 2 || total != from.orbit_size)) continue;
        if (k > 1 && c.param_count == 0) break;
        const Real w = o.weight * Real(from.orbit_size) / Real(total);
        for (std::size_t first = 0; first + k <= kRestartSeeds.size(); ++first) {
          QuadRule trial = r.rule;
          trial.orbits[pos] = Orbit{c.index, seeded(c.param_count, kRestartSeeds[first]), w};
          for (std::size_t j = 1; j < k; ++j)
            trial.orbits.push_back(Orbit{c.index, seeded(c.param_count, kRestartSeeds[first + j]), w});
          if (accept(r, trial, TraceAction::collapse, static_cast<int>(pos), o.symmetry, c.index, plan, config))
            return true;
        }
      }
    }
  }
  return false;
}

}  // namespace

Reduction reduce_with_restarts(const QuadRule& rule, const ReductionPlan& plan, const SolverConfig& config,
                               bool split) {
  Reduction r = remove_nodes(rule, plan, config);
  while (reseeded_elimination(r, plan, config) || reseeded_collapse(r, plan, config, false) ||
         (split && reseeded_collapse(r, plan, config, true))) {
  }
  return r;
}

QuadRule simplex_rule(DomainKind d, int q, const SolverConfig& config) {
  if (d != DomainKind::triangle && d != DomainKind::tetrahedron)
    throw Error("simplex_rule: " + std::string(to_string(d)) + " is not a simplex");
  const int deg = std::max(q, 1);
  QuadRule init = compress_nodes(simplex_seed(d, deg), d, coincidence_tolerance(), deg);
  SolveOutcome check = certify_solve(init, config);
  if (!check.converged()) throw SolveFailed("symmetrized " + std::string(to_string(d)) + " seed did not certify");
  return reduce_with_restarts(check.rule, ReductionPlan::for_domain(d, deg), config).rule;
}

AuxRuleSource generated_aux_source(const SolverConfig& config) {
  return [config](DomainKind d, int q) {
    return ExternalRuleData{simplex_rule(d, q, config), "generated"};
  };
}

BuildResult build_rule(DomainKind d, int q, const BuildOptions& options, const AuxRuleSource& aux) {
  if (q < 1) throw Error("degree must be at least 1");
  if ((d == DomainKind::square || d == DomainKind::cube) && q % 2 == 0)
    throw Error("no even-degree fully symmetric rules exist on the " + std::string(to_string(d)));
  PrecisionScope scope(mode_bits(options.mode));
  const SolverConfig& cfg = options.solver;
  BuildResult result;
  switch (d) {
    case DomainKind::square:
      result.initial = init_square(q);
      result.init_method = "tensor";
      break;
    case DomainKind::cube:
      result.initial = init_cube(q);
      result.init_method = "tensor";
      break;
    case DomainKind::prism:
      result.initial = init_prism(q, aux(DomainKind::triangle, q), cfg);
      result.init_method = "tensor";
      break;
    case DomainKind::pyramid: {
      if (options.pyramid_init == PyramidInit::geometric) {
        try {
          result.initial = init_pyramid_geometric(q, aux(DomainKind::triangle, q),
                                                  aux(DomainKind::tetrahedron, std::max(q - 2, 1)), cfg);
          result.init_method = "geometric";
          break;
        } catch (const SolveFailed&) {
        }
      }
      QuadRule sq;
      if (options.square_rule) {
        sq = *options.square_rule;
      } else {
        BuildOptions sub = options;
        sub.plan.reset();
        sq = build_rule(DomainKind::square, q % 2 ? q : q + 1, sub, aux).reduced.rule;
      }
      result.initial = init_pyramid_algebraic(q, sq, cfg);
      result.init_method = "algebraic";
      break;
    }
    case DomainKind::triangle:
    case DomainKind::tetrahedron: {
      result.initial = compress_nodes(simplex_seed(d, q), d, coincidence_tolerance(), q);
      result.init_method = "symmetrized collapsed";
      break;
    }
    case DomainKind::line:
      throw Error("rules on the line are Gauss-Legendre rules");
  }
  SolveOutcome check = certify_solve(result.initial, cfg);
  if (!check.converged()) throw SolveFailed("initial rule does not satisfy the moment equations");
  const ReductionPlan plan = options.plan ? *options.plan : ReductionPlan::for_domain(d, q);
  result.reduced = options.restarts ? reduce_with_restarts(check.rule, plan, cfg) : remove_nodes(check.rule, plan, cfg);
  return result;
}

}  // namespace spiquad
