#include "spiquad/polybasis.hpp"

#include <algorithm>

namespace spiquad {

namespace {

Rule1D gl(int degree) { return gauss_legendre(min_gauss_points(degree), working_precision()); }

// Normalized Legendre values sqrt((2n+1)/2) P_n and derivatives, n = 0..q.
void normalized_legendre(const Real& x, int q, std::vector<Real>& val, std::vector<Real>& der) {
  val.resize(static_cast<std::size_t>(q) + 1);
  der.resize(static_cast<std::size_t>(q) + 1);
  legendre_values_derivs(x, q, val, der);
  for (int n = 0; n <= q; ++n) {
    Real s = sqrt(Real(2 * n + 1) / Real(2));
    val[n] *= s;
    der[n] *= s;
  }
}

// Elementary symmetric polynomials e_0..e_n of the centred barycentric
// coordinates of a simplex, with gradients.
void centred_invariants(const Point& x, std::vector<Real>& e, std::vector<Point>& grad) {
  const int dim = static_cast<int>(x.size());
  const int n = dim + 1;
  const Real half = Real(1) / Real(2);
  const Real shift = Real(1) / Real(n);
  std::vector<Real> mu(n);
  std::vector<Point> dmu(n, Point(dim, Real(0)));
  // lambda_1 = 1 - sum_i (x_i + 1)/2
  Real s(dim - 2);
  for (int i = 0; i < dim; ++i) s += x[i];
  mu[0] = -s * half;
  for (int i = 0; i < dim; ++i) dmu[0][i] = -half;
  for (int i = 0; i < dim; ++i) {
    mu[i + 1] = (x[i] + Real(1)) * half;
    dmu[i + 1][i] = half;
  }
  for (auto& m : mu) m -= shift;

  e.assign(n + 1, Real(0));
  grad.assign(n + 1, Point(dim, Real(0)));
  e[0] = 1;
  for (int i = 0; i < n; ++i) {
    for (int k = std::min(i + 1, n); k >= 1; --k) {
      for (int c = 0; c < dim; ++c) grad[k][c] += dmu[i][c] * e[k - 1] + mu[i] * grad[k - 1][c];
      e[k] += mu[i] * e[k - 1];
    }
  }
}

std::vector<std::vector<int>> distinct_permutations(std::vector<int> t) {
  std::sort(t.begin(), t.end());
  std::vector<std::vector<int>> out;
  do out.push_back(t);
  while (std::next_permutation(t.begin(), t.end()));
  return out;
}

}  // namespace

std::vector<Node> reference_quadrature(DomainKind d, int degree) {
  std::vector<Node> out;
  const Real one(1), two(2);
  switch (d) {
    case DomainKind::line: {
      auto r = gl(degree);
      for (std::size_t i = 0; i < r.nodes.size(); ++i) out.push_back({{r.nodes[i]}, r.weights[i]});
      break;
    }
    case DomainKind::square: {
      auto r = gl(degree);
      for (std::size_t i = 0; i < r.nodes.size(); ++i)
        for (std::size_t j = 0; j < r.nodes.size(); ++j)
          out.push_back({{r.nodes[i], r.nodes[j]}, r.weights[i] * r.weights[j]});
      break;
    }
    case DomainKind::cube: {
      auto r = gl(degree);
      for (std::size_t i = 0; i < r.nodes.size(); ++i)
        for (std::size_t j = 0; j < r.nodes.size(); ++j)
          for (std::size_t k = 0; k < r.nodes.size(); ++k)
            out.push_back({{r.nodes[i], r.nodes[j], r.nodes[k]}, r.weights[i] * r.weights[j] * r.weights[k]});
      break;
    }
    case DomainKind::triangle:
    case DomainKind::prism: {
      auto ra = gl(degree);
      auto rb = gl(degree + 1);
      auto rz = gl(degree);
      for (std::size_t j = 0; j < rb.nodes.size(); ++j) {
        const Real& b = rb.nodes[j];
        Real jac = (one - b) / two;
        for (std::size_t i = 0; i < ra.nodes.size(); ++i) {
          Real x = (one + ra.nodes[i]) * jac - one;
          Real w = ra.weights[i] * rb.weights[j] * jac;
          if (d == DomainKind::triangle) {
            out.push_back({{x, b}, w});
          } else {
            for (std::size_t k = 0; k < rz.nodes.size(); ++k) out.push_back({{x, b, rz.nodes[k]}, w * rz.weights[k]});
          }
        }
      }
      break;
    }
    case DomainKind::tetrahedron: {
      auto ra = gl(degree);
      auto rb = gl(degree + 1);
      auto rc = gl(degree + 2);
      for (std::size_t k = 0; k < rc.nodes.size(); ++k) {
        Real rest = one - rc.nodes[k];
        Real z = rc.nodes[k];
        for (std::size_t j = 0; j < rb.nodes.size(); ++j) {
          Real yy = (one + rb.nodes[j]) * rest / two;
          for (std::size_t i = 0; i < ra.nodes.size(); ++i) {
            Real xx = (one + ra.nodes[i]) * (rest - yy) / two;
            Real w = ra.weights[i] * rb.weights[j] * rc.weights[k] * rest * rest * (one - rb.nodes[j]) / Real(8);
            out.push_back({{xx - one, yy - one, z}, w});
          }
        }
      }
      break;
    }
    case DomainKind::pyramid: {
      auto rxy = gl(degree);
      auto rz = gl(degree + 2);
      for (std::size_t k = 0; k < rz.nodes.size(); ++k) {
        Real h = (one - rz.nodes[k]) / two;
        for (std::size_t i = 0; i < rxy.nodes.size(); ++i)
          for (std::size_t j = 0; j < rxy.nodes.size(); ++j)
            out.push_back({{rxy.nodes[i] * h, rxy.nodes[j] * h, rz.nodes[k]},
                           rxy.weights[i] * rxy.weights[j] * rz.weights[k] * h * h});
      }
      break;
    }
  }
  return out;
}

std::size_t polynomial_space_size(DomainKind d, int q) {
  std::size_t n = 1;
  const int dim = dimension(d);
  for (int i = 1; i <= dim; ++i) n = n * static_cast<std::size_t>(q + i) / static_cast<std::size_t>(i);
  return n;
}

void PolynomialSet::generator_values(const Point& x, std::vector<Real>& g, std::vector<Real>* grad) const {
  const int dim = dimension(domain_);
  g.assign(gens_.size(), Real(0));
  if (grad) grad->assign(gens_.size() * static_cast<std::size_t>(dim), Real(0));

  if (legendre_) {
    std::vector<std::vector<Real>> val(dim), der(dim);
    for (int c = 0; c < dim; ++c) normalized_legendre(x[c], degree_, val[c], der[c]);
    for (std::size_t l = 0; l < gens_.size(); ++l) {
      const auto& e = gens_[l];
      Real v = val[0][e[0]];
      for (int c = 1; c < dim; ++c) v *= val[c][e[c]];
      g[l] = v;
      if (grad) {
        for (int c = 0; c < dim; ++c) {
          Real p = der[c][e[c]];
          for (int o = 0; o < dim; ++o) {
            if (o != c) p *= val[o][e[o]];
          }
          (*grad)[l * dim + c] = p;
        }
      }
    }
    return;
  }

  // Simplex invariants, possibly times a Legendre polynomial in z (prism).
  const bool prism = domain_ == DomainKind::prism;
  const int sdim = prism ? 2 : dim;
  Point xs(x.begin(), x.begin() + sdim);
  std::vector<Real> e;
  std::vector<Point> de;
  centred_invariants(xs, e, de);
  std::vector<Real> zval, zder;
  if (prism) normalized_legendre(x[2], degree_, zval, zder);

  // Power tables for e2, e3, e4.
  const int maxp = degree_ / 2 + 1;
  std::vector<std::vector<Real>> pw(3, std::vector<Real>(maxp + 1, Real(1)));
  for (int f = 0; f < 3; ++f) {
    const int idx = f + 2;
    if (idx >= static_cast<int>(e.size())) continue;
    for (int p = 1; p <= maxp; ++p) pw[f][p] = pw[f][p - 1] * e[idx];
  }
  for (std::size_t l = 0; l < gens_.size(); ++l) {
    const auto& ex = gens_[l];
    // Exponents of e2, e3, and either e4 (tetrahedron) or the z degree (prism).
    const int n2 = ex[0], n3 = ex[1];
    const int n4 = prism ? 0 : ex[2];
    Real a = pw[0][n2], b = pw[1][n3], c = n4 > 0 ? pw[2][n4] : Real(1);
    Real zf = prism ? zval[ex[2]] : Real(1);
    g[l] = a * b * c * zf;
    if (grad) {
      for (int k = 0; k < sdim; ++k) {
        Real s(0);
        if (n2 > 0) s += Real(n2) * pw[0][n2 - 1] * b * c * de[2][k];
        if (n3 > 0) s += Real(n3) * a * pw[1][n3 - 1] * c * de[3][k];
        if (n4 > 0) s += Real(n4) * a * b * pw[2][n4 - 1] * de[4][k];
        (*grad)[l * dim + k] = s * zf;
      }
      if (prism) (*grad)[l * dim + 2] = a * b * zder[ex[2]];
    }
  }
}

void PolynomialSet::evaluate(const Point& x, std::span<Real> out) const {
  std::vector<Real> g;
  generator_values(x, g, nullptr);
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    Real s(0);
    for (const auto& t : rows_[k]) s += t.coef * g[t.gen];
    out[k] = s;
  }
}

void PolynomialSet::evaluate(const Point& x, std::span<Real> out, DenseMatrix& grad) const {
  const std::size_t dim = static_cast<std::size_t>(dimension(domain_));
  std::vector<Real> g, dg;
  generator_values(x, g, &dg);
  if (grad.rows() != rows_.size() || grad.cols() != dim) grad = DenseMatrix(rows_.size(), dim);
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    Real s(0);
    std::vector<Real> gs(dim, Real(0));
    for (const auto& t : rows_[k]) {
      s += t.coef * g[t.gen];
      for (std::size_t c = 0; c < dim; ++c) gs[c] += t.coef * dg[t.gen * dim + c];
    }
    out[k] = s;
    for (std::size_t c = 0; c < dim; ++c) grad(k, c) = gs[c];
  }
}

void PolynomialSet::orthonormalize(const std::vector<std::vector<Term>>& pre) {
  const auto quad = reference_quadrature(domain_, 2 * degree_);
  const std::size_t nq = quad.size();
  const std::size_t np = pre.size();

  // Pre-function values at the quadrature points, column-major by function.
  std::vector<std::vector<Real>> f(np, std::vector<Real>(nq));
  std::vector<Real> g;
  for (std::size_t q = 0; q < nq; ++q) {
    generator_values(quad[q].x, g, nullptr);
    for (std::size_t p = 0; p < np; ++p) {
      Real s(0);
      for (const auto& t : pre[p]) s += t.coef * g[t.gen];
      f[p][q] = s;
    }
  }

  auto inner = [&](const std::vector<Real>& a, const std::vector<Real>& b) {
    Real s(0);
    for (std::size_t q = 0; q < nq; ++q) s += quad[q].w * a[q] * b[q];
    return s;
  };

  const Real drop = pow2(-(working_precision() / 2));
  std::vector<std::vector<Real>> kept_vals;
  std::vector<std::vector<Real>> kept_coef;  // over pre-functions
  for (std::size_t p = 0; p < np; ++p) {
    std::vector<Real> v = f[p];
    std::vector<Real> c(np, Real(0));
    c[p] = 1;
    const Real n0 = sqrt(inner(v, v));
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < kept_vals.size(); ++k) {
        Real proj = inner(v, kept_vals[k]);
        for (std::size_t q = 0; q < nq; ++q) v[q] -= proj * kept_vals[k][q];
        for (std::size_t j = 0; j < np; ++j) c[j] -= proj * kept_coef[k][j];
      }
    }
    Real nrm = sqrt(inner(v, v));
    if (!(nrm > drop * n0)) continue;
    for (auto& x : v) x /= nrm;
    for (auto& x : c) x /= nrm;
    kept_vals.push_back(std::move(v));
    kept_coef.push_back(std::move(c));
  }

  rows_.clear();
  for (const auto& c : kept_coef) {
    std::vector<Real> dense(gens_.size(), Real(0));
    for (std::size_t p = 0; p < np; ++p) {
      if (c[p].is_zero()) continue;
      for (const auto& t : pre[p]) dense[t.gen] += c[p] * t.coef;
    }
    std::vector<Term> row;
    for (std::size_t l = 0; l < dense.size(); ++l) {
      if (!dense[l].is_zero()) row.push_back({l, dense[l]});
    }
    rows_.push_back(std::move(row));
  }
}

void PolynomialSet::finish_moments() {
  moments_.assign(rows_.size(), Real(0));
  if (!moments_.empty()) moments_[0] = sqrt(volume(domain_));
}

OrthoBasis::OrthoBasis(DomainKind d, int q) : PolynomialSet(d, q, true) {
  if (q < 0) throw Error("degree must be non-negative");
  const int dim = dimension(d);
  for (int t = 0; t <= q; ++t) {
    if (dim == 1) {
      gens_.push_back({t, 0, 0});
    } else if (dim == 2) {
      for (int a = t; a >= 0; --a) gens_.push_back({a, t - a, 0});
    } else {
      for (int a = t; a >= 0; --a)
        for (int b = t - a; b >= 0; --b) gens_.push_back({a, b, t - a - b});
    }
  }
  std::vector<std::vector<Term>> pre;
  for (std::size_t l = 0; l < gens_.size(); ++l) pre.push_back({{l, Real(1)}});
  if (d == DomainKind::line || d == DomainKind::square || d == DomainKind::cube) {
    rows_ = std::move(pre);
  } else {
    orthonormalize(pre);
  }
  finish_moments();
}

ObjectiveBasis::ObjectiveBasis(DomainKind d, int q)
    : PolynomialSet(d, q, d == DomainKind::line || d == DomainKind::square || d == DomainKind::cube ||
                              d == DomainKind::pyramid) {
  if (q < 0) throw Error("degree must be non-negative");
  const int dim = dimension(d);

  auto add_gen = [&](Exponents e) {
    for (std::size_t l = 0; l < gens_.size(); ++l) {
      if (gens_[l] == e) return l;
    }
    gens_.push_back(e);
    return gens_.size() - 1;
  };

  std::vector<std::vector<Term>> pre;
  switch (d) {
    case DomainKind::line:
    case DomainKind::square:
    case DomainKind::cube: {
      // Fully symmetrized normalized Legendre products with even indices.
      for (int t = 0; t <= q; t += 2) {
        std::vector<std::vector<int>> tuples;
        if (dim == 1) tuples.push_back({t});
        for (int a = t; dim == 2 && a >= 0; a -= 2) {
          if (t - a <= a) tuples.push_back({a, t - a});
        }
        for (int a = t; dim == 3 && a >= 0; a -= 2) {
          for (int b = std::min(a, t - a); b >= 0; b -= 2) {
            int c = t - a - b;
            if (c <= b) tuples.push_back({a, b, c});
          }
        }
        for (const auto& tup : tuples) {
          auto perms = distinct_permutations(tup);
          Real coef = Real(1) / sqrt(Real(static_cast<long>(perms.size())));
          std::vector<Term> row;
          for (auto it = perms.rbegin(); it != perms.rend(); ++it) {
            Exponents e{0, 0, 0};
            for (int i = 0; i < dim; ++i) e[i] = (*it)[i];
            row.push_back({add_gen(e), coef});
          }
          pre.push_back(std::move(row));
        }
      }
      rows_ = std::move(pre);
      finish_moments();
      return;
    }
    case DomainKind::pyramid:
      for (int t = 0; t <= q; ++t) {
        for (int c = 0; c <= t; ++c) {
          const int s = t - c;
          if (s % 2 != 0) continue;
          for (int a = s; a >= 0; a -= 2) {
            const int b = s - a;
            if (b > a) continue;
            std::vector<Term> row{{add_gen({a, b, c}), Real(1)}};
            if (a != b) row.push_back({add_gen({b, a, c}), Real(1)});
            pre.push_back(std::move(row));
          }
        }
      }
      break;
    case DomainKind::triangle:
    case DomainKind::prism:
    case DomainKind::tetrahedron: {
      const bool prism = d == DomainKind::prism;
      const bool tet = d == DomainKind::tetrahedron;
      for (int t = 0; t <= q; ++t) {
        for (int k = 0; k <= t; ++k) {
          // k: z degree (prism, even only) or exponent of e4 (tetrahedron).
          int used = 0;
          if (prism) {
            if (k % 2 != 0) continue;
            used = k;
          } else if (tet) {
            used = 4 * k;
          } else if (k > 0) {
            continue;
          }
          for (int j = 0; 3 * j + used <= t; ++j) {
            const int rest = t - used - 3 * j;
            if (rest % 2 != 0) continue;
            pre.push_back({{add_gen({rest / 2, j, k}), Real(1)}});
          }
        }
      }
      break;
    }
  }
  orthonormalize(pre);
  finish_moments();
}

DenseMatrix vandermonde(const QuadRule& rule, const PolynomialSet& basis) {
  auto nodes = expand_rule(rule);
  DenseMatrix v(nodes.size(), basis.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) basis.evaluate(nodes[j].x, v.row(j));
  return v;
}

DenseMatrix reduced_vandermonde(const QuadRule& rule, const PolynomialSet& basis) {
  DenseMatrix v(rule.orbits.size(), basis.size());
  for (std::size_t j = 0; j < rule.orbits.size(); ++j) {
    const auto& o = rule.orbits[j];
    basis.evaluate(chart(rule.domain, o.symmetry, o.params), v.row(j));
  }
  return v;
}

DenseVector residual_vector(const QuadRule& rule, const ObjectiveBasis& basis) {
  DenseVector r(basis.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = -basis.moments()[k];
  std::vector<Real> u(basis.size());
  for (const auto& o : rule.orbits) {
    basis.evaluate(chart(rule.domain, o.symmetry, o.params), u);
    Real sw = Real(symmetry_class(rule.domain, o.symmetry).orbit_size) * o.weight;
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += sw * u[k];
  }
  return r;
}

Real residual(const QuadRule& rule, const ObjectiveBasis& basis) { return vector_norm2(residual_vector(rule, basis)); }

Real residual(std::span<const Node> nodes, const PolynomialSet& basis) {
  DenseVector r(basis.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = -basis.moments()[k];
  std::vector<Real> u(basis.size());
  for (const auto& n : nodes) {
    basis.evaluate(n.x, u);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += n.w * u[k];
  }
  return vector_norm2(r);
}

}  // namespace spiquad
