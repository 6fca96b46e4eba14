#include "doctest.h"

#include "spiquad/domains.hpp"

#include <algorithm>
#include <random>

using namespace spiquad;

namespace {

const DomainKind kAll[] = {DomainKind::line, DomainKind::triangle, DomainKind::square, DomainKind::tetrahedron,
                           DomainKind::cube, DomainKind::prism, DomainKind::pyramid};
const DomainKind kTargets[] = {DomainKind::square, DomainKind::cube, DomainKind::prism, DomainKind::pyramid};

std::vector<Real> random_params(std::mt19937& rng, int count) {
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::vector<Real> p;
  for (int i = 0; i < count; ++i) p.emplace_back(u(rng));
  return p;
}

Point random_interior(std::mt19937& rng, DomainKind d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Point x;
    for (int i = 0; i < dimension(d); ++i) x.emplace_back(u(rng));
    if (contains(d, x)) return x;
  }
}

bool same_node_sets(const std::vector<Node>& a, const std::vector<Node>& b, const Real& tol) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& n : a) {
    bool hit = false;
    for (std::size_t j = 0; j < b.size() && !hit; ++j) {
      if (used[j]) continue;
      if (distance(n.x, b[j].x) <= tol && abs(n.w - b[j].w) <= tol) {
        used[j] = true;
        hit = true;
      }
    }
    if (!hit) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("group orders") {
  CHECK(symmetry_group(DomainKind::line).size() == 2);
  CHECK(symmetry_group(DomainKind::triangle).size() == 6);
  CHECK(symmetry_group(DomainKind::square).size() == 8);
  CHECK(symmetry_group(DomainKind::tetrahedron).size() == 24);
  CHECK(symmetry_group(DomainKind::cube).size() == 48);
  CHECK(symmetry_group(DomainKind::prism).size() == 12);
  CHECK(symmetry_group(DomainKind::pyramid).size() == 8);
}

TEST_CASE("group elements map the domain onto itself and have inverses") {
  PrecisionScope scope(113);
  std::mt19937 rng(11);
  for (DomainKind d : kAll) {
    const auto& g = symmetry_group(d);
    Point id = random_interior(rng, d);
    CHECK(g[0].apply(id) == id);
    for (int trial = 0; trial < 20; ++trial) {
      Point x = random_interior(rng, d);
      for (std::size_t k = 0; k < g.size(); ++k) {
        Point y = g[k].apply(x);
        CHECK(contains(d, y));
        Point back = g[group_inverse(d, k)].apply(y);
        CHECK(distance(back, x) < pow2(-100));
      }
    }
  }
}

TEST_CASE("volumes") {
  PrecisionScope scope(113);
  CHECK(volume(DomainKind::square) == Real(4));
  CHECK(volume(DomainKind::cube) == Real(8));
  CHECK(volume(DomainKind::prism) == Real(4));
  CHECK(abs(volume(DomainKind::pyramid) - Real(8) / Real(3)) < pow2(-110));
  CHECK(volume(DomainKind::triangle) == Real(2));
}

TEST_CASE("volume agrees with a Monte Carlo hit ratio") {
  PrecisionScope scope(113);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (DomainKind d : kAll) {
    const int dim = dimension(d);
    const int samples = 20000;
    int hits = 0;
    for (int i = 0; i < samples; ++i) {
      Point x;
      for (int k = 0; k < dim; ++k) x.emplace_back(u(rng));
      if (contains(d, x)) ++hits;
    }
    double estimate = std::pow(2.0, dim) * hits / samples;
    CHECK_MESSAGE(std::abs(estimate - volume(d).to_double()) < 0.05 * std::pow(2.0, dim), to_string(d));
  }
}

TEST_CASE("containment is strict") {
  PrecisionScope scope(113);
  CHECK(contains(DomainKind::square, {Real(0.99), Real(-0.99)}));
  CHECK_FALSE(contains(DomainKind::square, {Real(1), Real(0)}));
  CHECK(contains(DomainKind::pyramid, {Real(0.4), Real(-0.4), Real(0)}));
  CHECK_FALSE(contains(DomainKind::pyramid, {Real(0.5), Real(0), Real(0)}));
  CHECK_FALSE(contains(DomainKind::pyramid, {Real(0), Real(0), Real(1)}));
  CHECK(contains(DomainKind::prism, {Real(-0.5), Real(-0.4), Real(0.9)}));
  CHECK_FALSE(contains(DomainKind::prism, {Real(0.5), Real(-0.5), Real(0)}));
  CHECK(contains(DomainKind::triangle, {Real(-1) / Real(3), Real(-1) / Real(3)}));
  CHECK_FALSE(contains(DomainKind::tetrahedron, {Real(-0.5), Real(-0.5), Real(0)}));
}

TEST_CASE("property: orbit sizes of all target symmetry classes") {
  PrecisionScope scope(113);
  const std::vector<std::pair<DomainKind, std::vector<int>>> table = {
      {DomainKind::square, {1, 4, 4, 8}},
      {DomainKind::cube, {1, 6, 8, 12, 24, 24, 48}},
      {DomainKind::prism, {1, 2, 3, 6, 6, 12}},
      {DomainKind::pyramid, {1, 4, 4, 8}},
  };
  const std::vector<std::pair<DomainKind, std::vector<int>>> params = {
      {DomainKind::square, {0, 1, 1, 2}},
      {DomainKind::cube, {0, 1, 1, 1, 2, 2, 3}},
      {DomainKind::prism, {0, 1, 1, 2, 2, 3}},
      {DomainKind::pyramid, {1, 2, 2, 3}},
  };
  std::mt19937 rng(3);
  int classes = 0;
  for (std::size_t t = 0; t < table.size(); ++t) {
    auto [d, sizes] = table[t];
    REQUIRE(symmetry_classes(d).size() == sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const auto& c = symmetry_classes(d)[i];
      CHECK(c.orbit_size == sizes[i]);
      CHECK(c.param_count == params[t].second[i]);
      for (int trial = 0; trial < 10; ++trial) {
        Orbit o{c.index, random_params(rng, c.param_count), Real(1)};
        auto nodes = expand_orbit(o, d);
        CHECK(static_cast<int>(nodes.size()) == sizes[i]);
        for (const auto& n : nodes) CHECK(contains(d, n.x));
      }
      ++classes;
    }
  }
  CHECK(classes == 21);
}

TEST_CASE("auxiliary orbit sizes") {
  PrecisionScope scope(113);
  std::mt19937 rng(9);
  const std::vector<std::pair<DomainKind, std::vector<int>>> table = {
      {DomainKind::line, {1, 2}},
      {DomainKind::triangle, {1, 3, 6}},
      {DomainKind::tetrahedron, {1, 4, 6, 12, 24}},
  };
  for (auto [d, sizes] : table) {
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const auto& c = symmetry_classes(d)[i];
      Orbit o{c.index, random_params(rng, c.param_count), Real(1)};
      auto nodes = expand_orbit(o, d);
      CHECK(static_cast<int>(nodes.size()) == sizes[i]);
      for (const auto& n : nodes) CHECK(contains(d, n.x));
    }
  }
}

TEST_CASE("orbit examples") {
  PrecisionScope scope(113);
  Orbit s3{3, {Real(0.75)}, Real(0.25)};
  auto nodes = expand_orbit(s3, DomainKind::square);
  REQUIRE(nodes.size() == 4);
  for (const auto& n : nodes) {
    CHECK(abs(n.x[0]) == Real(0.5));
    CHECK(abs(n.x[1]) == Real(0.5));
    CHECK(n.w == Real(0.25));
  }
  // The triangle median chart passes through the centroid at u = 2/3.
  Point c = chart(DomainKind::triangle, 2, std::vector<Real>{Real(2) / Real(3)});
  CHECK(abs(c[0] + Real(1) / Real(3)) < pow2(-110));
  CHECK(abs(c[1] + Real(1) / Real(3)) < pow2(-110));
  // Pyramid S1 sits on the axis.
  Point a = chart(DomainKind::pyramid, 1, std::vector<Real>{Real(0.25)});
  CHECK(a[0].is_zero());
  CHECK(a[2] == Real(-0.5));
}

TEST_CASE("coincident images raise DegenerateOrbit") {
  PrecisionScope scope(113);
  Orbit s4{4, {Real(0.5), Real(0.5)}, Real(1)};
  CHECK_THROWS_AS(expand_orbit(s4, DomainKind::square), DegenerateOrbit);
  Orbit c7{7, {Real(0.3), Real(0.6), Real(0.6)}, Real(1)};
  CHECK_THROWS_AS(expand_orbit(c7, DomainKind::cube), DegenerateOrbit);
}

TEST_CASE("property: compress after expand recovers every orbit") {
  PrecisionScope scope(113);
  std::mt19937 rng(1234);
  const Real tol(1e-20);
  for (DomainKind d : kAll) {
    for (const auto& c : symmetry_classes(d)) {
      for (int trial = 0; trial < 100; ++trial) {
        Orbit o{c.index, random_params(rng, c.param_count), Real(0.1 + trial * 1e-3)};
        std::vector<Node> nodes;
        try {
          nodes = expand_orbit(o, d);
        } catch (const DegenerateOrbit&) {
          continue;
        }
        std::shuffle(nodes.begin(), nodes.end(), rng);
        QuadRule r = compress_nodes(nodes, d, tol);
        REQUIRE(r.orbits.size() == 1);
        CHECK_MESSAGE(r.orbits[0].symmetry == c.index, to_string(d) << " " << c.label());
        CHECK(r.orbits[0].weight == o.weight);
        CHECK(same_node_sets(expand_orbit(r.orbits[0], d), nodes, pow2(-90)));
        // Canonical parameters are a fixed point.
        QuadRule again = compress_nodes(expand_orbit(r.orbits[0], d), d, tol);
        for (std::size_t k = 0; k < o.params.size(); ++k) {
          CHECK(abs(again.orbits[0].params[k] - r.orbits[0].params[k]) < pow2(-90));
        }
      }
    }
  }
}

TEST_CASE("compress groups a multi-orbit rule and rejects broken symmetry") {
  PrecisionScope scope(113);
  QuadRule rule;
  rule.domain = DomainKind::cube;
  rule.orbits = {{1, {}, Real(0.5)}, {2, {Real(0.7)}, Real(0.2)}, {7, {Real(0.9), Real(0.75), Real(0.375)}, Real(0.1)}};
  auto nodes = expand_rule(rule);
  CHECK(nodes.size() == 55);
  QuadRule back = compress_nodes(nodes, DomainKind::cube, Real(1e-20));
  CHECK(back.node_count() == 55);
  CHECK(back.orbit_counts() == std::map<int, int>{{1, 1}, {2, 1}, {7, 1}});

  nodes.pop_back();
  CHECK_THROWS_AS(compress_nodes(nodes, DomainKind::cube, Real(1e-20)), NotSymmetric);

  auto perturbed = expand_rule(rule);
  perturbed[3].w += Real(1e-6);
  CHECK_THROWS_AS(compress_nodes(perturbed, DomainKind::cube, Real(1e-20)), NotSymmetric);
}

TEST_CASE("projection examples") {
  PrecisionScope scope(113);
  const Real tol = pow2(-100);
  auto p = project_to_symmetry({Real(0.5), Real(0.1)}, 2, DomainKind::square);
  CHECK(abs(p.params[0] - Real(0.75)) < tol);
  CHECK(abs(p.distance - Real(0.1)) < tol);

  p = project_to_symmetry({Real(-0.1), Real(0.5)}, 2, DomainKind::square);
  CHECK(abs(p.params[0] - Real(0.75)) < tol);

  p = project_to_symmetry({Real(0.25), Real(0.75)}, 3, DomainKind::square);
  CHECK(abs(p.params[0] - Real(0.75)) < tol);
  CHECK(abs(p.distance - sqrt(Real(0.125))) < tol);

  p = project_to_symmetry({Real(0.125), Real(0.25), Real(0.5)}, 1, DomainKind::pyramid);
  CHECK(abs(p.params[0] - Real(0.75)) < tol);
  CHECK(abs(p.distance - sqrt(Real(0.078125))) < tol);

  // The centre of the square lies on no S2 orbit.
  CHECK_THROWS_AS(project_to_symmetry({Real(0), Real(0)}, 2, DomainKind::square), NoProjection);
}

TEST_CASE("property: projections land at the reported distance") {
  PrecisionScope scope(113);
  std::mt19937 rng(77);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    DomainKind d = kTargets[trial % 4];
    const auto& classes = symmetry_classes(d);
    const auto& c = classes[static_cast<std::size_t>(trial / 4) % classes.size()];
    Point x = random_interior(rng, d);
    Projection p;
    try {
      p = project_to_symmetry(x, c.index, d);
    } catch (const NoProjection&) {
      continue;
    }
    CHECK(params_valid(p.params));
    Point rep = chart(d, c.index, p.params);
    Real best(1e9);
    for (const auto& g : symmetry_group(d)) best = min(best, distance(g.apply(rep), x));
    CHECK(abs(best - p.distance) < pow2(-90));
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("property: chart Jacobians agree with finite differences") {
  PrecisionScope scope(113);
  std::mt19937 rng(21);
  const Real h = pow2(-40);
  for (DomainKind d : kAll) {
    for (const auto& c : symmetry_classes(d)) {
      if (c.param_count == 0) continue;
      auto u = random_params(rng, c.param_count);
      DenseMatrix j = chart_jacobian(d, c.index, u);
      for (int k = 0; k < c.param_count; ++k) {
        auto up = u, dn = u;
        up[k] += h;
        dn[k] -= h;
        Point a = chart(d, c.index, up), b = chart(d, c.index, dn);
        for (int i = 0; i < dimension(d); ++i) {
          Real fd = (a[i] - b[i]) / (Real(2) * h);
          CHECK(abs(fd - j(i, k)) < pow2(-60));
        }
      }
    }
  }
}

TEST_CASE("chart inverse round trips on each locus") {
  PrecisionScope scope(113);
  std::mt19937 rng(4);
  for (DomainKind d : kAll) {
    for (const auto& c : symmetry_classes(d)) {
      auto u = random_params(rng, c.param_count);
      auto back = chart_inverse(d, c.index, chart(d, c.index, u));
      REQUIRE(back.size() == u.size());
      for (std::size_t k = 0; k < u.size(); ++k) CHECK(abs(back[k] - u[k]) < pow2(-100));
    }
  }
}

TEST_CASE("domain and label parsing") {
  CHECK(parse_domain("pyramid") == DomainKind::pyramid);
  CHECK_THROWS_AS(parse_domain("sphere"), Error);
  CHECK(parse_symmetry_label(DomainKind::cube, "S7") == 7);
  CHECK_THROWS_AS(parse_symmetry_label(DomainKind::square, "S5"), Error);
  CHECK_THROWS_AS(parse_symmetry_label(DomainKind::square, "T1"), Error);
}
