#include "spiquad/domains.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <utility>

namespace spiquad {

namespace {

using Affine = std::pair<std::array<int, 3>, int>;  // linear form and constant

GroupElement from_rows(int dim, const std::vector<Affine>& rows) {
  GroupElement g;
  g.dim = dim;
  for (int i = 0; i < dim; ++i) {
    g.a[i] = rows[i].first;
    g.b[i] = rows[i].second;
  }
  return g;
}

std::vector<GroupElement> signed_permutations(int n, int total_dim) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::vector<GroupElement> out;
  do {
    for (int mask = 0; mask < (1 << n); ++mask) {
      GroupElement g;
      g.dim = total_dim;
      for (int i = 0; i < n; ++i) g.a[i][perm[i]] = (mask >> i) & 1 ? -1 : 1;
      for (int i = n; i < total_dim; ++i) g.a[i][i] = 1;
      out.push_back(g);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Affine coordinate functions permuted by the simplex symmetries.
std::vector<Affine> simplex_functions(int dim) {
  std::vector<Affine> f;
  for (int i = 0; i < dim; ++i) {
    std::array<int, 3> a{};
    a[i] = 1;
    f.push_back({a, 0});
  }
  std::array<int, 3> a{};
  for (int i = 0; i < dim; ++i) a[i] = -1;
  f.push_back({a, -(dim - 1)});
  return f;
}

std::vector<GroupElement> simplex_group(int dim) {
  const auto f = simplex_functions(dim);
  std::vector<int> idx(dim + 1);
  for (int i = 0; i <= dim; ++i) idx[i] = i;
  std::vector<GroupElement> out;
  // Ordered selections of `dim` distinct functions, lexicographic.
  do {
    std::vector<Affine> rows;
    for (int i = 0; i < dim; ++i) rows.push_back(f[idx[i]]);
    GroupElement g = from_rows(dim, rows);
    bool seen = false;
    for (const auto& h : out) seen = seen || (h.a == g.a && h.b == g.b);
    if (!seen) out.push_back(g);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

std::vector<GroupElement> make_group(DomainKind d) {
  switch (d) {
    case DomainKind::line: return signed_permutations(1, 1);
    case DomainKind::square: return signed_permutations(2, 2);
    case DomainKind::cube: return signed_permutations(3, 3);
    case DomainKind::pyramid: return signed_permutations(2, 3);
    case DomainKind::triangle: return simplex_group(2);
    case DomainKind::tetrahedron: return simplex_group(3);
    case DomainKind::prism: {
      std::vector<GroupElement> out;
      for (GroupElement g : simplex_group(2)) {
        g.dim = 3;
        for (int s : {1, -1}) {
          g.a[2] = {0, 0, s};
          g.b[2] = 0;
          out.push_back(g);
        }
      }
      return out;
    }
  }
  return {};
}

GroupElement compose(const GroupElement& h, const GroupElement& g) {
  GroupElement r;
  r.dim = g.dim;
  for (int i = 0; i < g.dim; ++i) {
    r.b[i] = h.b[i];
    for (int k = 0; k < g.dim; ++k) r.b[i] += h.a[i][k] * g.b[k];
    for (int j = 0; j < g.dim; ++j) {
      int s = 0;
      for (int k = 0; k < g.dim; ++k) s += h.a[i][k] * g.a[k][j];
      r.a[i][j] = s;
    }
  }
  return r;
}

bool is_identity(const GroupElement& g) {
  for (int i = 0; i < g.dim; ++i) {
    if (g.b[i] != 0) return false;
    for (int j = 0; j < g.dim; ++j) {
      if (g.a[i][j] != (i == j ? 1 : 0)) return false;
    }
  }
  return true;
}

struct GroupTable {
  std::vector<GroupElement> elements;
  std::vector<std::size_t> inverse;
};

const GroupTable& group_table(DomainKind d) {
  static const auto tables = [] {
    std::array<GroupTable, 7> t;
    for (int k = 0; k < 7; ++k) {
      auto dk = static_cast<DomainKind>(k);
      t[k].elements = make_group(dk);
      const auto& el = t[k].elements;
      t[k].inverse.resize(el.size());
      for (std::size_t i = 0; i < el.size(); ++i) {
        for (std::size_t j = 0; j < el.size(); ++j) {
          if (is_identity(compose(el[j], el[i]))) {
            t[k].inverse[i] = j;
            break;
          }
        }
      }
    }
    return t;
  }();
  return tables[static_cast<int>(d)];
}

using Dirs = std::vector<std::array<int, 3>>;
using Origin = std::array<std::array<int, 2>, 3>;

constexpr Origin kZero{{{0, 1}, {0, 1}, {0, 1}}};
constexpr Origin kTriCentroid{{{-1, 3}, {-1, 3}, {0, 1}}};
constexpr Origin kTetCentroid{{{-1, 2}, {-1, 2}, {-1, 2}}};

SymmetryClass cls(DomainKind d, int index, int params, int size, Origin o, Dirs dirs) {
  SymmetryClass c;
  c.domain = d;
  c.index = index;
  c.param_count = params;
  c.orbit_size = size;
  c.origin = o;
  c.directions = std::move(dirs);
  return c;
}

std::vector<SymmetryClass> make_classes(DomainKind d) {
  using D = DomainKind;
  const std::array<int, 3> ex{1, 0, 0}, ey{0, 1, 0}, ez{0, 0, 1};
  switch (d) {
    case D::line:
      return {cls(d, 1, 0, 1, kZero, {}), cls(d, 2, 1, 2, kZero, {ex})};
    case D::square:
      return {cls(d, 1, 0, 1, kZero, {}), cls(d, 2, 1, 4, kZero, {ex}),
              cls(d, 3, 1, 4, kZero, {{1, 1, 0}}), cls(d, 4, 2, 8, kZero, {ex, ey})};
    case D::cube:
      return {cls(d, 1, 0, 1, kZero, {}),
              cls(d, 2, 1, 6, kZero, {ex}),
              cls(d, 3, 1, 8, kZero, {{1, 1, 1}}),
              cls(d, 4, 1, 12, kZero, {{1, 1, 0}}),
              cls(d, 5, 2, 24, kZero, {{1, 1, 0}, ez}),
              cls(d, 6, 2, 24, kZero, {ex, ey}),
              cls(d, 7, 3, 48, kZero, {ex, ey, ez})};
    case D::triangle:
      return {cls(d, 1, 0, 1, kTriCentroid, {}), cls(d, 2, 1, 3, kTriCentroid, {{1, -2, 0}}),
              cls(d, 3, 2, 6, kZero, {ex, ey})};
    case D::tetrahedron:
      return {cls(d, 1, 0, 1, kTetCentroid, {}),
              cls(d, 2, 1, 4, kTetCentroid, {{1, 1, -3}}),
              cls(d, 3, 1, 6, kTetCentroid, {{1, -1, -1}}),
              cls(d, 4, 2, 12, kTetCentroid, {{1, -1, -1}, {0, 1, -1}}),
              cls(d, 5, 3, 24, kZero, {ex, ey, ez})};
    case D::prism:
      return {cls(d, 1, 0, 1, kTriCentroid, {}),
              cls(d, 2, 1, 2, kTriCentroid, {ez}),
              cls(d, 3, 1, 3, kTriCentroid, {{1, -2, 0}}),
              cls(d, 4, 2, 6, kTriCentroid, {{1, -2, 0}, ez}),
              cls(d, 5, 2, 6, kZero, {ex, ey}),
              cls(d, 6, 3, 12, kZero, {ex, ey, ez})};
    case D::pyramid:
      return {cls(d, 1, 1, 1, kZero, {ez}), cls(d, 2, 2, 4, kZero, {ex, ez}),
              cls(d, 3, 2, 4, kZero, {{1, 1, 0}, ez}), cls(d, 4, 3, 8, kZero, {ex, ey, ez})};
  }
  return {};
}

const std::vector<SymmetryClass>& class_table(DomainKind d) {
  static const auto tables = [] {
    std::array<std::vector<SymmetryClass>, 7> t;
    for (int k = 0; k < 7; ++k) t[k] = make_classes(static_cast<DomainKind>(k));
    return t;
  }();
  return tables[static_cast<int>(d)];
}

// Triangle charts in (x, y).
void tri_median(const Real& u, Real& x, Real& y) {
  x = u - Real(1);
  y = Real(1) - Real(2) * u;
}

void tri_general(const Real& u1, const Real& u2, Real& x, Real& y) {
  Real rest = Real(1) - u1;
  Real l2 = rest * u2;
  Real l3 = rest - l2;
  x = Real(2) * l2 - Real(1);
  y = Real(2) * l3 - Real(1);
}

Point tri_centroid() { return {Real(-1) / Real(3), Real(-1) / Real(3)}; }

Point make_point(int dim) { return Point(static_cast<std::size_t>(dim), Real(0)); }

Point locus_origin(const SymmetryClass& c, int dim) {
  Point o = make_point(dim);
  for (int i = 0; i < dim; ++i) o[i] = Real(c.origin[i][0]) / Real(c.origin[i][1]);
  return o;
}

// Orthonormalizes `dirs` in place (Gram-Schmidt, two passes).
void orthonormalize(std::vector<Point>& dirs) {
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        Real c = dot(dirs[i], dirs[j]);
        for (std::size_t k = 0; k < dirs[i].size(); ++k) dirs[i][k] -= c * dirs[j][k];
      }
    }
    Real nrm = vector_norm2(dirs[i]);
    for (auto& v : dirs[i]) v /= nrm;
  }
}

// Orthogonal projection of x onto origin + span(dirs), dirs orthonormal.
Point project_affine(const Point& x, const Point& origin, const std::vector<Point>& dirs) {
  Point p = origin;
  Point diff(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) diff[k] = x[k] - origin[k];
  for (const auto& q : dirs) {
    Real c = dot(diff, q);
    for (std::size_t k = 0; k < x.size(); ++k) p[k] += c * q[k];
  }
  return p;
}

Real max_abs_diff(const Point& a, const Point& b) {
  Real m(0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    Real d = abs(a[k] - b[k]);
    if (d > m) m = d;
  }
  return m;
}

// Lexicographic comparison with a tolerance for equal entries.
bool lex_greater(const std::vector<Real>& a, const std::vector<Real>& b, const Real& tol) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    Real d = a[i] - b[i];
    if (d > tol) return true;
    if (d < -tol) return false;
  }
  return false;
}

int distinct_images(DomainKind d, const Point& x, const Real& tol) {
  std::vector<Point> images;
  for (const auto& g : symmetry_group(d)) {
    Point y = g.apply(x);
    bool dup = false;
    for (const auto& z : images) dup = dup || max_abs_diff(z, y) <= tol;
    if (!dup) images.push_back(std::move(y));
  }
  return static_cast<int>(images.size());
}

std::vector<Real> canonical_params(DomainKind d, const SymmetryClass& c, const Point& x, const Real& tol,
                                   bool& found) {
  const int dim = dimension(d);
  const Point origin = locus_origin(c, dim);
  std::vector<Point> dirs;
  for (const auto& v : c.directions) {
    Point p = make_point(dim);
    for (int i = 0; i < dim; ++i) p[i] = Real(v[i]);
    dirs.push_back(std::move(p));
  }
  orthonormalize(dirs);
  std::vector<Real> best;
  found = false;
  for (const auto& g : symmetry_group(d)) {
    Point y = g.apply(x);
    Point p = project_affine(y, origin, dirs);
    if (distance(y, p) > tol) continue;
    auto params = chart_inverse(d, c.index, p);
    if (!params_valid(params)) continue;
    if (!found || lex_greater(params, best, tol)) {
      best = std::move(params);
      found = true;
    }
  }
  return best;
}

}  // namespace

int dimension(DomainKind d) {
  switch (d) {
    case DomainKind::line: return 1;
    case DomainKind::triangle:
    case DomainKind::square: return 2;
    default: return 3;
  }
}

std::string_view to_string(DomainKind d) {
  switch (d) {
    case DomainKind::line: return "line";
    case DomainKind::triangle: return "triangle";
    case DomainKind::square: return "square";
    case DomainKind::tetrahedron: return "tetrahedron";
    case DomainKind::cube: return "cube";
    case DomainKind::prism: return "prism";
    case DomainKind::pyramid: return "pyramid";
  }
  return "?";
}

DomainKind parse_domain(std::string_view name) {
  for (int k = 0; k < 7; ++k) {
    auto d = static_cast<DomainKind>(k);
    if (to_string(d) == name) return d;
  }
  throw Error("unknown domain '" + std::string(name) + "'");
}

bool is_target_domain(DomainKind d) {
  return d == DomainKind::square || d == DomainKind::cube || d == DomainKind::prism || d == DomainKind::pyramid;
}

Point GroupElement::apply(const Point& x) const {
  Point y = apply_linear(x);
  for (int i = 0; i < dim; ++i) {
    if (b[i] != 0) y[i] += Real(b[i]);
  }
  return y;
}

Point GroupElement::apply_linear(const Point& x) const {
  Point y(static_cast<std::size_t>(dim), Real(0));
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      switch (a[i][j]) {
        case 0: break;
        case 1: y[i] += x[j]; break;
        case -1: y[i] -= x[j]; break;
        default: y[i] += Real(a[i][j]) * x[j]; break;
      }
    }
  }
  return y;
}

const std::vector<GroupElement>& symmetry_group(DomainKind d) { return group_table(d).elements; }

std::size_t group_inverse(DomainKind d, std::size_t g) { return group_table(d).inverse.at(g); }

const std::vector<SymmetryClass>& symmetry_classes(DomainKind d) { return class_table(d); }

const SymmetryClass& symmetry_class(DomainKind d, int index) {
  const auto& t = class_table(d);
  if (index < 1 || index > static_cast<int>(t.size())) {
    throw Error("symmetry S" + std::to_string(index) + " does not exist on the " + std::string(to_string(d)));
  }
  return t[index - 1];
}

int parse_symmetry_label(DomainKind d, std::string_view label) {
  int index = 0;
  if (label.size() < 2 || label[0] != 'S' ||
      std::from_chars(label.data() + 1, label.data() + label.size(), index).ec != std::errc{}) {
    throw Error("malformed symmetry label '" + std::string(label) + "'");
  }
  symmetry_class(d, index);
  return index;
}

std::size_t QuadRule::node_count() const {
  std::size_t n = 0;
  for (const auto& o : orbits) n += static_cast<std::size_t>(symmetry_class(domain, o.symmetry).orbit_size);
  return n;
}

std::map<int, int> QuadRule::orbit_counts() const {
  std::map<int, int> m;
  for (const auto& o : orbits) ++m[o.symmetry];
  return m;
}

Real QuadRule::total_weight() const {
  Real s(0);
  for (const auto& o : orbits) s += Real(symmetry_class(domain, o.symmetry).orbit_size) * o.weight;
  return s;
}

namespace {

// Box coordinates in (-1, 1) are stored as (x + 1)/2.
Real coord(const Real& u) { return Real(2) * u - Real(1); }
Real uncoord(const Real& x) { return (x + Real(1)) / Real(2); }

}  // namespace

Point chart(DomainKind d, int symmetry, std::span<const Real> u) {
  const auto& c = symmetry_class(d, symmetry);
  if (static_cast<int>(u.size()) != c.param_count) {
    throw Error(c.label() + " on the " + std::string(to_string(d)) + " takes " + std::to_string(c.param_count) +
                " parameters");
  }
  Point p = make_point(dimension(d));
  switch (d) {
    case DomainKind::line:
      if (symmetry == 2) p[0] = coord(u[0]);
      break;
    case DomainKind::square:
      switch (symmetry) {
        case 2: p[0] = coord(u[0]); break;
        case 3: p[0] = coord(u[0]); p[1] = p[0]; break;
        case 4: p[0] = coord(u[0]); p[1] = coord(u[1]); break;
      }
      break;
    case DomainKind::cube:
      switch (symmetry) {
        case 2: p[0] = coord(u[0]); break;
        case 3: p[0] = coord(u[0]); p[1] = p[0]; p[2] = p[0]; break;
        case 4: p[0] = coord(u[0]); p[1] = p[0]; break;
        case 5: p[0] = coord(u[0]); p[1] = p[0]; p[2] = coord(u[1]); break;
        case 6: p[0] = coord(u[0]); p[1] = coord(u[1]); break;
        case 7: p[0] = coord(u[0]); p[1] = coord(u[1]); p[2] = coord(u[2]); break;
      }
      break;
    case DomainKind::triangle:
      switch (symmetry) {
        case 1: p = tri_centroid(); break;
        case 2: tri_median(u[0], p[0], p[1]); break;
        case 3: tri_general(u[0], u[1], p[0], p[1]); break;
      }
      break;
    case DomainKind::prism: {
      Point t = tri_centroid();
      p[0] = t[0];
      p[1] = t[1];
      switch (symmetry) {
        case 2: p[2] = coord(u[0]); break;
        case 3: tri_median(u[0], p[0], p[1]); break;
        case 4: tri_median(u[0], p[0], p[1]); p[2] = coord(u[1]); break;
        case 5: tri_general(u[0], u[1], p[0], p[1]); break;
        case 6: tri_general(u[0], u[1], p[0], p[1]); p[2] = coord(u[2]); break;
      }
      break;
    }
    case DomainKind::pyramid: {
      const Real& uz = u[u.size() - 1];
      p[2] = Real(2) * uz - Real(1);
      Real h = Real(1) - uz;
      switch (symmetry) {
        case 2: p[0] = coord(u[0]) * h; break;
        case 3: p[0] = coord(u[0]) * h; p[1] = p[0]; break;
        case 4: p[0] = coord(u[0]) * h; p[1] = coord(u[1]) * h; break;
      }
      break;
    }
    case DomainKind::tetrahedron: {
      const Real one(1), two(2);
      switch (symmetry) {
        case 1:
          p[0] = p[1] = p[2] = Real(-1) / two;
          break;
        case 2:
          p[0] = two * u[0] / Real(3) - one;
          p[1] = p[0];
          p[2] = one - two * u[0];
          break;
        case 3:
          p[0] = u[0] - one;
          p[1] = -u[0];
          p[2] = -u[0];
          break;
        case 4: {
          Real rest = one - u[0];
          p[0] = u[0] - one;
          p[1] = two * rest * u[1] - one;
          p[2] = two * rest * (one - u[1]) - one;
          break;
        }
        case 5: {
          Real r1 = one - u[0];
          Real r2 = r1 * (one - u[1]);
          p[0] = two * r1 * u[1] - one;
          p[1] = two * r2 * u[2] - one;
          p[2] = two * r2 * (one - u[2]) - one;
          break;
        }
      }
      break;
    }
  }
  return p;
}

DenseMatrix chart_jacobian(DomainKind d, int symmetry, std::span<const Real> u) {
  const auto& c = symmetry_class(d, symmetry);
  DenseMatrix j(static_cast<std::size_t>(dimension(d)), static_cast<std::size_t>(c.param_count));
  const Real one(1), two(2);
  auto tri_general_jac = [&](const Real& u1, const Real& u2) {
    j(0, 0) = -two * u2;
    j(0, 1) = two * (one - u1);
    j(1, 0) = -two * (one - u2);
    j(1, 1) = -two * (one - u1);
  };
  switch (d) {
    case DomainKind::line:
      if (symmetry == 2) j(0, 0) = 2;
      break;
    case DomainKind::square:
      switch (symmetry) {
        case 2: j(0, 0) = 2; break;
        case 3: j(0, 0) = 2; j(1, 0) = 2; break;
        case 4: j(0, 0) = 2; j(1, 1) = 2; break;
      }
      break;
    case DomainKind::cube:
      switch (symmetry) {
        case 2: j(0, 0) = 2; break;
        case 3: j(0, 0) = 2; j(1, 0) = 2; j(2, 0) = 2; break;
        case 4: j(0, 0) = 2; j(1, 0) = 2; break;
        case 5: j(0, 0) = 2; j(1, 0) = 2; j(2, 1) = 2; break;
        case 6: j(0, 0) = 2; j(1, 1) = 2; break;
        case 7: j(0, 0) = 2; j(1, 1) = 2; j(2, 2) = 2; break;
      }
      break;
    case DomainKind::triangle:
      if (symmetry == 2) {
        j(0, 0) = 1;
        j(1, 0) = -2;
      } else if (symmetry == 3) {
        tri_general_jac(u[0], u[1]);
      }
      break;
    case DomainKind::prism:
      switch (symmetry) {
        case 2: j(2, 0) = 2; break;
        case 3: j(0, 0) = 1; j(1, 0) = -2; break;
        case 4: j(0, 0) = 1; j(1, 0) = -2; j(2, 1) = 2; break;
        case 5: tri_general_jac(u[0], u[1]); break;
        case 6: tri_general_jac(u[0], u[1]); j(2, 2) = 2; break;
      }
      break;
    case DomainKind::pyramid: {
      const std::size_t kz = u.size() - 1;
      const Real h = one - u[kz];
      j(2, kz) = 2;
      switch (symmetry) {
        case 2: j(0, 0) = two * h; j(0, kz) = -coord(u[0]); break;
        case 3:
          j(0, 0) = two * h;
          j(1, 0) = two * h;
          j(0, kz) = -coord(u[0]);
          j(1, kz) = -coord(u[0]);
          break;
        case 4:
          j(0, 0) = two * h;
          j(1, 1) = two * h;
          j(0, kz) = -coord(u[0]);
          j(1, kz) = -coord(u[1]);
          break;
      }
      break;
    }
    case DomainKind::tetrahedron:
      switch (symmetry) {
        case 2:
          j(0, 0) = two / Real(3);
          j(1, 0) = two / Real(3);
          j(2, 0) = -2;
          break;
        case 3:
          j(0, 0) = 1;
          j(1, 0) = -1;
          j(2, 0) = -1;
          break;
        case 4: {
          Real rest = one - u[0];
          j(0, 0) = 1;
          j(1, 0) = -two * u[1];
          j(1, 1) = two * rest;
          j(2, 0) = -two * (one - u[1]);
          j(2, 1) = -two * rest;
          break;
        }
        case 5: {
          Real r1 = one - u[0];
          Real s2 = one - u[1];
          Real s3 = one - u[2];
          j(0, 0) = -two * u[1];
          j(0, 1) = two * r1;
          j(1, 0) = -two * s2 * u[2];
          j(1, 1) = -two * r1 * u[2];
          j(1, 2) = two * r1 * s2;
          j(2, 0) = -two * s2 * s3;
          j(2, 1) = -two * r1 * s3;
          j(2, 2) = -two * r1 * s2;
          break;
        }
      }
      break;
  }
  return j;
}

std::vector<Real> chart_inverse(DomainKind d, int symmetry, const Point& p) {
  const Real one(1), two(2);
  auto tri_general_inv = [&](const Real& x, const Real& y) {
    Real l1 = -(x + y) / two;
    Real l2 = (x + one) / two;
    return std::vector<Real>{l1, l2 / (one - l1)};
  };
  switch (d) {
    case DomainKind::line:
      if (symmetry == 2) return {uncoord(p[0])};
      return {};
    case DomainKind::square:
      switch (symmetry) {
        case 2: return {uncoord(p[0])};
        case 3: return {uncoord((p[0] + p[1]) / two)};
        case 4: return {uncoord(p[0]), uncoord(p[1])};
      }
      return {};
    case DomainKind::cube:
      switch (symmetry) {
        case 2: return {uncoord(p[0])};
        case 3: return {uncoord((p[0] + p[1] + p[2]) / Real(3))};
        case 4: return {uncoord((p[0] + p[1]) / two)};
        case 5: return {uncoord((p[0] + p[1]) / two), uncoord(p[2])};
        case 6: return {uncoord(p[0]), uncoord(p[1])};
        case 7: return {uncoord(p[0]), uncoord(p[1]), uncoord(p[2])};
      }
      return {};
    case DomainKind::triangle:
      switch (symmetry) {
        case 2: return {p[0] + one};
        case 3: return tri_general_inv(p[0], p[1]);
      }
      return {};
    case DomainKind::prism:
      switch (symmetry) {
        case 2: return {uncoord(p[2])};
        case 3: return {p[0] + one};
        case 4: return {p[0] + one, uncoord(p[2])};
        case 5: return tri_general_inv(p[0], p[1]);
        case 6: {
          auto r = tri_general_inv(p[0], p[1]);
          r.push_back(uncoord(p[2]));
          return r;
        }
      }
      return {};
    case DomainKind::pyramid: {
      Real uz = (p[2] + one) / two;
      Real h = (one - p[2]) / two;
      switch (symmetry) {
        case 1: return {uz};
        case 2: return {uncoord(p[0] / h), uz};
        case 3: return {uncoord((p[0] + p[1]) / (two * h)), uz};
        case 4: return {uncoord(p[0] / h), uncoord(p[1] / h), uz};
      }
      return {};
    }
    case DomainKind::tetrahedron: {
      Real l1 = -(one + p[0] + p[1] + p[2]) / two;
      Real l2 = (p[0] + one) / two;
      Real l3 = (p[1] + one) / two;
      switch (symmetry) {
        case 2: return {Real(3) * l2};
        case 3: return {two * l2};
        case 4: return {two * l2, l3 / (one - two * l2)};
        case 5: return {l1, l2 / (one - l1), l3 / (one - l1 - l2)};
      }
      return {};
    }
  }
  return {};
}

bool params_valid(std::span<const Real> params) {
  for (const Real& u : params) {
    if (!(u > Real(0) && u < Real(1))) return false;
  }
  return true;
}

Real coincidence_tolerance() { return pow2(-(working_precision() / 2)); }

std::vector<Node> expand_orbit(const Orbit& orbit, DomainKind d) {
  const auto& c = symmetry_class(d, orbit.symmetry);
  const Point rep = chart(d, orbit.symmetry, orbit.params);
  const Real tol = coincidence_tolerance();
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(c.orbit_size));
  for (const auto& g : symmetry_group(d)) {
    Point y = g.apply(rep);
    bool dup = false;
    for (const auto& n : nodes) {
      if (max_abs_diff(n.x, y) <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      if (static_cast<int>(nodes.size()) == c.orbit_size) {
        throw DegenerateOrbit(c.label() + " orbit has more images than its orbit size");
      }
      nodes.push_back({std::move(y), orbit.weight});
    }
  }
  if (static_cast<int>(nodes.size()) != c.orbit_size) {
    throw DegenerateOrbit(c.label() + " orbit collapses to " + std::to_string(nodes.size()) + " distinct nodes");
  }
  return nodes;
}

std::vector<Node> expand_rule(const QuadRule& rule) {
  std::vector<Node> out;
  out.reserve(rule.node_count());
  for (const auto& o : rule.orbits) {
    auto part = expand_orbit(o, rule.domain);
    for (auto& n : part) out.push_back(std::move(n));
  }
  return out;
}

QuadRule compress_nodes(std::span<const Node> nodes, DomainKind d, const Real& tol, int degree) {
  QuadRule rule;
  rule.domain = d;
  rule.degree = degree;
  const int dim = dimension(d);
  for (const auto& n : nodes) {
    if (static_cast<int>(n.x.size()) != dim) throw NotSymmetric("node has the wrong dimension");
  }

  // Sorted first coordinate for range lookups.
  std::vector<std::pair<double, std::size_t>> index;
  index.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace_back(nodes[i].x[0].to_double(), i);
  std::sort(index.begin(), index.end());

  const Real match_tol = Real(4) * tol;
  const double window = match_tol.to_double() + 1e-14;
  std::vector<bool> used(nodes.size(), false);

  auto find_match = [&](const Point& y) -> std::ptrdiff_t {
    const double y0 = y[0].to_double();
    auto it = std::lower_bound(index.begin(), index.end(), std::make_pair(y0 - window, std::size_t{0}));
    for (; it != index.end() && it->first <= y0 + window; ++it) {
      if (!used[it->second] && max_abs_diff(nodes[it->second].x, y) <= match_tol) {
        return static_cast<std::ptrdiff_t>(it->second);
      }
    }
    return -1;
  };

  std::vector<const SymmetryClass*> order;
  for (const auto& c : symmetry_classes(d)) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(),
                   [](const SymmetryClass* a, const SymmetryClass* b) { return a->param_count < b->param_count; });

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (used[i]) continue;
    const Point& x = nodes[i].x;

    std::vector<Point> images;
    for (const auto& g : symmetry_group(d)) {
      Point y = g.apply(x);
      bool dup = false;
      for (const auto& z : images) dup = dup || max_abs_diff(z, y) <= tol;
      if (!dup) images.push_back(std::move(y));
    }
    const int count = static_cast<int>(images.size());

    const SymmetryClass* chosen = nullptr;
    std::vector<Real> params;
    for (const SymmetryClass* c : order) {
      if (c->orbit_size != count) continue;
      bool found = false;
      auto p = canonical_params(d, *c, x, tol, found);
      if (found) {
        chosen = c;
        params = std::move(p);
        break;
      }
    }
    if (chosen == nullptr) {
      throw NotSymmetric("node " + std::to_string(i) + " fits no symmetry class");
    }

    Orbit orbit{chosen->index, std::move(params), nodes[i].w};
    std::vector<Node> expanded;
    try {
      expanded = expand_orbit(orbit, d);
    } catch (const DegenerateOrbit&) {
      throw NotSymmetric("node " + std::to_string(i) + " lies too close to a smaller orbit");
    }
    const Real wtol = match_tol * max(Real(1), abs(orbit.weight));
    for (const auto& e : expanded) {
      auto j = find_match(e.x);
      if (j < 0 || abs(nodes[static_cast<std::size_t>(j)].w - orbit.weight) > wtol) {
        throw NotSymmetric("orbit of node " + std::to_string(i) + " is incomplete or has unequal weights");
      }
      used[static_cast<std::size_t>(j)] = true;
    }
    rule.orbits.push_back(std::move(orbit));
  }
  return rule;
}

Projection project_to_symmetry(const Point& node, int target, DomainKind d) {
  const auto& c = symmetry_class(d, target);
  const int dim = dimension(d);
  const Point origin = locus_origin(c, dim);
  const auto& group = symmetry_group(d);

  std::optional<Projection> best;
  for (std::size_t gi = 0; gi < group.size(); ++gi) {
    const auto& g = group[gi];
    Point o = g.apply(origin);
    std::vector<Point> dirs;
    for (const auto& v : c.directions) {
      Point p = make_point(dim);
      for (int i = 0; i < dim; ++i) p[i] = Real(v[i]);
      dirs.push_back(g.apply_linear(p));
    }
    orthonormalize(dirs);
    Point p = project_affine(node, o, dirs);
    Real dist = distance(node, p);
    if (best && !(dist < best->distance)) continue;
    Point back = group[group_inverse(d, gi)].apply(p);
    auto params = chart_inverse(d, target, back);
    if (!params_valid(params)) continue;
    if (distinct_images(d, back, coincidence_tolerance()) != c.orbit_size) continue;
    best = Projection{std::move(params), dist};
  }
  if (!best) throw NoProjection("no valid " + c.label() + " projection");
  return *best;
}

Real volume(DomainKind d) {
  switch (d) {
    case DomainKind::line: return Real(2);
    case DomainKind::triangle: return Real(2);
    case DomainKind::square: return Real(4);
    case DomainKind::tetrahedron: return Real(4) / Real(3);
    case DomainKind::cube: return Real(8);
    case DomainKind::prism: return Real(4);
    case DomainKind::pyramid: return Real(8) / Real(3);
  }
  return Real(0);
}

bool contains(DomainKind d, const Point& x) {
  const Real one(1), zero(0);
  auto open_unit = [&](const Real& v) { return abs(v) < one; };
  switch (d) {
    case DomainKind::line: return open_unit(x[0]);
    case DomainKind::square: return open_unit(x[0]) && open_unit(x[1]);
    case DomainKind::cube: return open_unit(x[0]) && open_unit(x[1]) && open_unit(x[2]);
    case DomainKind::triangle: return x[0] > -one && x[1] > -one && x[0] + x[1] < zero;
    case DomainKind::tetrahedron:
      return x[0] > -one && x[1] > -one && x[2] > -one && x[0] + x[1] + x[2] < -one;
    case DomainKind::prism: return x[0] > -one && x[1] > -one && x[0] + x[1] < zero && open_unit(x[2]);
    case DomainKind::pyramid: {
      if (!open_unit(x[2])) return false;
      Real h = (one - x[2]) / Real(2);
      return abs(x[0]) < h && abs(x[1]) < h;
    }
  }
  return false;
}

Real distance(const Point& a, const Point& b) {
  Real s(0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    Real t = a[k] - b[k];
    s += t * t;
  }
  return sqrt(s);
}

}  // namespace spiquad
