#pragma once

// Reference domains, their symmetry groups, and symmetry orbits.
//
// Coordinates follow the usual conventions:
//   line        |x| < 1
//   triangle    -1 < y < -x < 1                 (area 2)
//   square      |x|, |y| < 1
//   tetrahedron x, y, z > -1, x + y + z < -1    (volume 4/3)
//   cube        |x|, |y|, |z| < 1
//   prism       -1 < y < -x < 1, |z| < 1
//   pyramid     |z| < 1, |x|, |y| < (1 - z)/2
//
// Every orbit is stored as a symmetry class index, a vector of parameters in
// (0, 1) and a per-node weight. The parameter chart of each class maps the
// open unit box onto its locus; see chart() for the concrete maps.

#include "spiquad/mpnum.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spiquad {

enum class DomainKind { line, triangle, square, tetrahedron, cube, prism, pyramid };

int dimension(DomainKind d);
std::string_view to_string(DomainKind d);
/// Throws Error on an unknown name.
DomainKind parse_domain(std::string_view name);
/// The four domains the toolkit builds rules for.
bool is_target_domain(DomainKind d);

using Point = std::vector<Real>;

/// Affine map x -> A x + b with small integer coefficients.
struct GroupElement {
  int dim = 0;
  std::array<std::array<int, 3>, 3> a{};
  std::array<int, 3> b{};

  Point apply(const Point& x) const;
  /// Linear part applied to a direction.
  Point apply_linear(const Point& v) const;
};

/// All group elements, identity first.
const std::vector<GroupElement>& symmetry_group(DomainKind d);
/// Index of the inverse of element `g` in symmetry_group(d).
std::size_t group_inverse(DomainKind d, std::size_t g);

/// One symmetry class: orbit size, parameter count, and the affine locus that
/// its representative points sweep.
struct SymmetryClass {
  DomainKind domain{};
  int index = 0;  // 1-based, "S<index>"
  int param_count = 0;
  int orbit_size = 0;
  // Locus = origin + span(directions), in rational/integer coordinates.
  std::array<std::array<int, 2>, 3> origin{};  // {numerator, denominator}
  std::vector<std::array<int, 3>> directions;

  std::string label() const { return "S" + std::to_string(index); }
};

const std::vector<SymmetryClass>& symmetry_classes(DomainKind d);
const SymmetryClass& symmetry_class(DomainKind d, int index);
/// Parses "S3" into 3 and validates it for the domain.
int parse_symmetry_label(DomainKind d, std::string_view label);

struct Orbit {
  int symmetry = 1;
  std::vector<Real> params;
  Real weight;
};

struct Node {
  Point x;
  Real w;
};

struct QuadRule {
  DomainKind domain = DomainKind::square;
  int degree = 0;
  std::vector<Orbit> orbits;

  std::size_t node_count() const;
  /// Orbit counts keyed by symmetry index.
  std::map<int, int> orbit_counts() const;
  /// Sum over orbits of orbit_size * weight.
  Real total_weight() const;
};

/// Representative point of an orbit.
Point chart(DomainKind d, int symmetry, std::span<const Real> params);
/// d(point)/d(params): dimension x param_count.
DenseMatrix chart_jacobian(DomainKind d, int symmetry, std::span<const Real> params);
/// Parameters of a point that lies on the class locus (may fall outside (0,1)).
std::vector<Real> chart_inverse(DomainKind d, int symmetry, const Point& p);
bool params_valid(std::span<const Real> params);

/// Coincidence threshold for expanded nodes: 2^-(precision/2).
Real coincidence_tolerance();

/// Expands an orbit into orbit_size nodes; throws DegenerateOrbit.
std::vector<Node> expand_orbit(const Orbit& orbit, DomainKind d);
std::vector<Node> expand_rule(const QuadRule& rule);

/// Groups a symmetric node set into orbits with canonical parameters.
/// Throws NotSymmetric when no decomposition exists within `tol`.
QuadRule compress_nodes(std::span<const Node> nodes, DomainKind d, const Real& tol, int degree = 0);

struct Projection {
  std::vector<Real> params;
  Real distance;
};

/// Closest point to `node` on the region swept by class `target` (all group
/// images of its locus) whose parameters are valid. Throws NoProjection.
Projection project_to_symmetry(const Point& node, int target, DomainKind d);

Real volume(DomainKind d);
/// Strict interior membership.
bool contains(DomainKind d, const Point& x);

Real distance(const Point& a, const Point& b);

}  // namespace spiquad
