#include "doctest.h"

#include "spiquad/builder.hpp"

#include <cmath>
#include <random>

using namespace spiquad;

namespace {

const SolverConfig& fast() {
  static const SolverConfig cfg = SolverConfig::for_mode(PrecisionMode::fast);
  return cfg;
}

Real residual_of(const QuadRule& r) { return residual(r, ObjectiveBasis(r.domain, r.degree)); }

void check_certified(const QuadRule& r) {
  CHECK(residual_of(r) < fast().tolerance);
  for (const auto& n : expand_rule(r)) {
    CHECK(n.w > Real(0));
    CHECK(contains(r.domain, n.x));
  }
}

ExternalRuleData triangle_degree2() {
  QuadRule t{DomainKind::triangle, 2, {{2, {Real(0.3)}, Real(0.6)}}};
  auto out = lma_solve(t, ObjectiveBasis(DomainKind::triangle, 2), fast());
  REQUIRE(out.converged());
  return {out.rule, "test"};
}

}  // namespace

TEST_CASE("default plans") {
  PrecisionScope scope(113);
  auto sq = ReductionPlan::for_domain(DomainKind::square, 5);
  CHECK(sq.bundles == std::vector<std::vector<int>>{{4}, {3, 2}, {1}});
  CHECK(sq.priorities[1][0] == Real(100000));
  CHECK(sq.collapse_threshold == Real::parse("0.25"));
  CHECK(ReductionPlan::for_domain(DomainKind::square, 31).collapse_threshold == Real::parse("0.1"));
  CHECK(ReductionPlan::for_domain(DomainKind::cube, 19).collapse_threshold == Real::parse("0.25"));
  CHECK(ReductionPlan::for_domain(DomainKind::cube, 20).collapse_threshold == Real::parse("0.1"));
  auto cube = ReductionPlan::for_domain(DomainKind::cube, 7);
  CHECK(cube.bundles == std::vector<std::vector<int>>{{7}, {6, 5}, {4, 3, 2}, {1}});
  CHECK(cube.priority_of(2) == Real(10000000000LL));
  auto prism = ReductionPlan::for_domain(DomainKind::prism, 3);
  CHECK(prism.bundles == std::vector<std::vector<int>>{{6}, {5, 4}, {3, 2}, {1}});
  CHECK(prism.priority_of(4) == Real(100000));
  CHECK(prism.priority_of(5) == Real(1));
  CHECK(ReductionPlan::for_domain(DomainKind::pyramid, 3).priority_of(3) == Real(100000));
}

TEST_CASE("tensor initial rules") {
  PrecisionScope scope(113);
  CHECK(init_square(1).node_count() == 1);
  CHECK(init_square(3).node_count() == 9);
  CHECK(init_square(5).node_count() == 9);
  CHECK(init_cube(1).node_count() == 1);
  CHECK(init_cube(5).node_count() == 27);
  CHECK(init_cube(7).node_count() == 125);
  auto sq = init_square(3);
  CHECK(sq.orbit_counts().count(1) == 1);
  CHECK(sq.orbit_counts().count(2) == 1);
  auto cube5 = init_cube(5).orbit_counts();
  for (int s : {1, 2, 3, 4}) CHECK(cube5.count(s) == 1);
  auto cube7 = init_cube(7).orbit_counts();
  for (int s : {1, 2, 4, 5}) CHECK(cube7.count(s) == 1);
  for (const auto& r : {init_square(5), init_cube(5), init_cube(7)}) {
    auto out = lma_solve(r, ObjectiveBasis(r.domain, r.degree), fast());
    CHECK(out.converged());
    CHECK(out.iterations == 0);
  }
}

TEST_CASE("prism initial rule from a degree 2 triangle rule") {
  PrecisionScope scope(113);
  ExternalRuleData tri = triangle_degree2();
  CHECK(tri.rule.node_count() == 3);
  QuadRule p = init_prism(2, tri, fast());
  CHECK(p.node_count() == 12);
  auto out = lma_solve(p, ObjectiveBasis(DomainKind::prism, 2), fast());
  CHECK(out.converged());
  CHECK(out.iterations == 0);
  CHECK_THROWS_AS(init_prism(3, tri, fast()), MissingData);

  QuadRule one{DomainKind::triangle, 1, {{1, {}, Real(2)}}};
  CHECK(init_prism(1, {one, "test"}, fast()).node_count() == 1);
}

TEST_CASE("add_center keeps the rule certified") {
  PrecisionScope scope(113);
  QuadRule c = add_center(triangle_degree2().rule, fast());
  CHECK(c.node_count() == 4);
  CHECK(c.orbit_counts().at(1) == 1);
  check_certified(c);
}

TEST_CASE("algebraic pyramid construction") {
  PrecisionScope scope(113);
  QuadRule center{DomainKind::square, 1, {{1, {}, Real(4)}}};
  QuadRule p = init_pyramid_algebraic(1, center, fast());
  CHECK(p.node_count() == 2);
  for (const auto& n : expand_rule(p)) {
    CHECK(n.x[0].is_zero());
    CHECK(n.x[1].is_zero());
  }
  CHECK(residual_of(p) < fast().tolerance);

  // Square q=5 (9 nodes with center) and E = 4 points for degree 7 in z.
  QuadRule p5 = init_pyramid_algebraic(5, init_square(5), fast());
  CHECK(p5.node_count() == 36);
  auto out = lma_solve(p5, ObjectiveBasis(DomainKind::pyramid, 5), fast());
  CHECK(out.iterations == 0);
}

TEST_CASE("Duffy map exactness") {
  PrecisionScope scope(113);
  for (int c : {5, 7}) {
    QuadRule cube = init_cube(c);
    auto nodes = init_pyramid_duffy(cube);
    CHECK(nodes.size() == cube.node_count());
    CHECK(residual(nodes, OrthoBasis(DomainKind::pyramid, c / 2 - 1)) < Real(1e-28));
    // A tensor Gauss rule with A points per axis is exact to 2A - 3 after the map.
    const int a = min_odd_gauss_points(c);
    CHECK(residual(nodes, OrthoBasis(DomainKind::pyramid, 2 * a - 3)) < Real(1e-28));
    CHECK(residual(nodes, OrthoBasis(DomainKind::pyramid, 2 * a - 2)) > Real(1e-3));
  }
}

TEST_CASE("geometric pyramid seed") {
  PrecisionScope scope(113);
  auto aux = generated_aux_source(fast());
  for (int q : {2, 3, 4}) {
    QuadRule seed = pyramid_geometric_seed(q, aux(DomainKind::triangle, q), aux(DomainKind::tetrahedron, std::max(q - 2, 1)));
    const Real w = volume(DomainKind::pyramid) / Real(static_cast<long>(seed.node_count()));
    for (const auto& n : expand_rule(seed)) {
      CHECK(abs(n.w - w) < Real(1e-30));
      CHECK(contains(DomainKind::pyramid, n.x));
    }
    CHECK(abs(seed.total_weight() - volume(DomainKind::pyramid)) < Real(1e-30));
  }
}

TEST_CASE("orbit priority examples") {
  PrecisionScope scope(113);
  const Real s = Real::parse("0.01");
  Orbit o{3, {Real(0.5)}, Real::parse("0.3")};
  CHECK(orbit_priority(o, Real(1), Parameterization::cartesian, s) == Real::parse("0.3"));
  CHECK(abs(orbit_priority(o, Real(1), Parameterization::exponential, s) - log(Real::parse("0.3")) / s) < Real(1e-28));
  Orbit unit{3, {Real(0.5)}, Real(1)};
  Real pe = orbit_priority(unit, Real(100000), Parameterization::exponential, s);
  CHECK(std::abs(pe.to_double() - std::log(1e5) / 0.01) < 1e-9);
  CHECK(std::abs(pe.to_double() - 1151.29) < 0.01);
}

TEST_CASE("property: priority order agrees across parameterizations") {
  PrecisionScope scope(113);
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> w(1e-6, 10.0);
  const std::vector<Real> ps{Real(1), Real(100000), Real(10000000000LL)};
  const Real s = Real::parse("0.01");
  for (int trial = 0; trial < 1000; ++trial) {
    Orbit a{2, {Real(0.5)}, Real(w(rng))}, b{2, {Real(0.5)}, Real(w(rng))};
    const Real& pa = ps[static_cast<std::size_t>(trial % 3)];
    const Real& pb = ps[static_cast<std::size_t>((trial / 3) % 3)];
    bool cart = orbit_priority(a, pa, Parameterization::cartesian, s) < orbit_priority(b, pb, Parameterization::cartesian, s);
    bool expo = orbit_priority(a, pa, Parameterization::exponential, s) < orbit_priority(b, pb, Parameterization::exponential, s);
    CHECK(cart == expo);
  }
}

TEST_CASE("remove_orbits on the square") {
  PrecisionScope scope(113);
  const std::vector<int> all{4, 3, 2, 1};
  const std::vector<Real> prios{Real(1), Real(100000), Real(1), Real(1)};
  EliminationTrace trace;
  QuadRule r3 = remove_orbits(init_square(3), all, prios, fast(), &trace);
  CHECK(r3.node_count() == 4);
  REQUIRE(r3.orbits.size() == 1);
  CHECK(r3.orbits[0].symmetry == 3);
  check_certified(r3);
  CHECK_FALSE(trace.entries.empty());

  QuadRule r5 = remove_orbits(init_square(5), all, prios, fast());
  CHECK(r5.node_count() == 8);
  check_certified(r5);

  EliminationTrace none;
  QuadRule again = remove_orbits(r3, all, prios, fast(), &none);
  CHECK(none.entries.empty());
  CHECK(again.orbits[0].params[0] == r3.orbits[0].params[0]);
}

TEST_CASE("collapse onto the square diagonal") {
  PrecisionScope scope(113);
  const Real a = (Real(1) + Real(1) / sqrt(Real(3))) / Real(2);
  QuadRule r{DomainKind::square, 3, {{4, {a, a + Real::parse("0.02")}, Real::parse("0.5")}}};
  const Real before = r.total_weight();
  auto plan = ReductionPlan::for_domain(DomainKind::square, 3);
  EliminationTrace trace;
  QuadRule c = collapse_orbits(r, {4}, plan, fast(), &trace);
  REQUIRE(trace.entries.size() == 1);
  CHECK(trace.entries[0].action == TraceAction::collapse);
  CHECK(trace.entries[0].target == 3);
  CHECK(trace.entries[0].accepted);
  CHECK(c.node_count() == 4);
  CHECK(abs(c.orbits[0].params[0] - a) < Real(1e-28));
  CHECK(abs(c.total_weight() - before) < Real(1e-28));

  // (0.6, 0.3) is 0.21 from the diagonal and 0.3 from the axes.
  plan.collapse_threshold = Real::parse("0.1");
  QuadRule far{DomainKind::square, 3, {{4, {Real(0.8), Real(0.65)}, Real::parse("0.5")}}};
  EliminationTrace untouched;
  collapse_orbits(far, {4}, plan, fast(), &untouched);
  CHECK(untouched.entries.empty());
}

TEST_CASE("remove_nodes end to end") {
  PrecisionScope scope(113);
  auto sq = remove_nodes(init_square(5), ReductionPlan::for_domain(DomainKind::square, 5), fast());
  CHECK(sq.rule.node_count() == 8);
  check_certified(sq.rule);
  auto cube = remove_nodes(init_cube(5), ReductionPlan::for_domain(DomainKind::cube, 5), fast());
  CHECK(cube.rule.node_count() == 14);
  check_certified(cube.rule);
}

TEST_CASE("property: accepted trace entries shrink the rule by the right amount") {
  PrecisionScope scope(113);
  for (auto [d, q] : {std::pair{DomainKind::square, 9}, std::pair{DomainKind::cube, 5}}) {
    QuadRule init = d == DomainKind::square ? init_square(q) : init_cube(q);
    auto plan = ReductionPlan::for_domain(d, q);
    QuadRule cur = init;
    // Replay bundle by bundle and compare counts against the trace.
    for (std::size_t i = 0; i < plan.bundles.size(); ++i) {
      EliminationTrace t;
      const std::size_t before = cur.node_count();
      cur = remove_orbits(cur, plan.bundles[i], plan.priorities[i], fast(), &t);
      std::size_t removed = 0;
      for (const auto& e : t.entries) {
        CHECK(e.action == TraceAction::eliminate);
        if (e.accepted) removed += static_cast<std::size_t>(symmetry_class(d, e.symmetry).orbit_size);
      }
      CHECK(cur.node_count() == before - removed);
      check_certified(cur);
      for (std::size_t j = 0; j <= i; ++j) {
        EliminationTrace tc;
        const std::size_t b = cur.node_count();
        cur = collapse_orbits(cur, plan.bundles[j], plan, fast(), &tc);
        std::size_t gone = 0;
        for (const auto& e : tc.entries) {
          if (e.accepted)
            gone += static_cast<std::size_t>(symmetry_class(d, e.symmetry).orbit_size -
                                             symmetry_class(d, e.target).orbit_size);
        }
        CHECK(cur.node_count() == b - gone);
        check_certified(cur);
      }
    }
    CHECK(cur.node_count() <= init.node_count());
  }
}

TEST_CASE("build_rule targets") {
  BuildOptions opt;
  auto aux = generated_aux_source(fast());
  CHECK(build_rule(DomainKind::square, 7, opt, aux).reduced.rule.node_count() == 12);
  CHECK(build_rule(DomainKind::prism, 2, opt, aux).reduced.rule.node_count() == 5);
  auto pyr = build_rule(DomainKind::pyramid, 3, opt, aux);
  CHECK(pyr.init_method == "geometric");
  CHECK(pyr.reduced.rule.node_count() == 6);
  {
    PrecisionScope scope(113);
    check_certified(pyr.reduced.rule);
  }
  CHECK_THROWS_AS(build_rule(DomainKind::square, 4, opt, aux), Error);
  CHECK_THROWS_AS(build_rule(DomainKind::cube, 0, opt, aux), Error);

  BuildOptions alg = opt;
  alg.pyramid_init = PyramidInit::algebraic;
  auto a = build_rule(DomainKind::pyramid, 2, alg, aux);
  CHECK(a.init_method == "algebraic");
  CHECK(a.reduced.rule.node_count() <= a.initial.node_count());
}

TEST_CASE("plain Algorithm 2 is available") {
  BuildOptions opt;
  opt.restarts = false;
  auto aux = generated_aux_source(fast());
  auto r = build_rule(DomainKind::square, 5, opt, aux);
  CHECK(r.reduced.rule.node_count() == 8);
}

TEST_CASE("simplex generator") {
  PrecisionScope scope(113);
  auto t1 = simplex_rule(DomainKind::triangle, 1, fast());
  CHECK(t1.node_count() == 1);
  auto t2 = simplex_rule(DomainKind::triangle, 2, fast());
  CHECK(t2.node_count() == 3);
  check_certified(t2);
  auto k2 = simplex_rule(DomainKind::tetrahedron, 2, fast());
  CHECK(k2.node_count() == 4);
  check_certified(k2);
  CHECK_THROWS_AS(simplex_rule(DomainKind::square, 3, fast()), Error);
}

TEST_CASE("builds are deterministic") {
  BuildOptions opt;
  auto aux = generated_aux_source(fast());
  auto a = build_rule(DomainKind::cube, 5, opt, aux);
  auto b = build_rule(DomainKind::cube, 5, opt, aux);
  REQUIRE(a.reduced.trace.entries.size() == b.reduced.trace.entries.size());
  for (std::size_t i = 0; i < a.reduced.trace.entries.size(); ++i) {
    const auto& x = a.reduced.trace.entries[i];
    const auto& y = b.reduced.trace.entries[i];
    CHECK(x.orbit == y.orbit);
    CHECK(x.accepted == y.accepted);
    CHECK(x.iterations == y.iterations);
    CHECK(x.residual == y.residual);
  }
  REQUIRE(a.reduced.rule.orbits.size() == b.reduced.rule.orbits.size());
  for (std::size_t i = 0; i < a.reduced.rule.orbits.size(); ++i) {
    CHECK(a.reduced.rule.orbits[i].weight == b.reduced.rule.orbits[i].weight);
    CHECK(a.reduced.rule.orbits[i].params == b.reduced.rule.orbits[i].params);
  }
}
