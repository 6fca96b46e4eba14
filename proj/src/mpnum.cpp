#include "spiquad/mpnum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spiquad {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

void legendre_values(const Real& x, int n, std::span<Real> out) {
  out[0] = 1;
  if (n == 0) return;
  out[1] = x;
  for (int k = 1; k < n; ++k) {
    out[k + 1] = (Real(2 * k + 1) * x * out[k] - Real(k) * out[k - 1]) / Real(k + 1);
  }
}

void legendre_values_derivs(const Real& x, int n, std::span<Real> val, std::span<Real> der) {
  legendre_values(x, n, val);
  der[0] = 0;
  if (n == 0) return;
  der[1] = 1;
  // P'_{k+1} = P'_{k-1} + (2k + 1) P_k
  for (int k = 1; k < n; ++k) der[k + 1] = der[k - 1] + Real(2 * k + 1) * val[k];
}

void jacobi_values(const Real& x, int a, int n, std::span<Real> out) {
  out[0] = 1;
  if (n == 0) return;
  out[1] = (Real(a + 2) * x + Real(a)) / Real(2);
  for (int k = 1; k < n; ++k) {
    // Standard three-term recurrence with beta = 0.
    const long n1 = k + 1;
    const long s = 2 * k + a;
    Real c1(2 * n1 * (n1 + a) * s);
    Real c2 = Real((s + 1) * a * a);
    Real c3 = Real(s * (s + 1) * (s + 2));
    Real c4(2 * (k + a) * k * (s + 2));
    out[k + 1] = ((c2 + c3 * x) * out[k] - c4 * out[k - 1]) / c1;
  }
}

int min_odd_gauss_points(int degree) {
  int a = 1;
  while (2 * a - 1 < degree) a += 2;
  return a;
}

int min_gauss_points(int degree) { return std::max(1, (degree + 2) / 2); }

Rule1D gauss_legendre(int n, int bits) {
  if (n < 1) throw Error("gauss_legendre needs n >= 1");
  PrecisionScope scope(bits);
  Rule1D rule;
  rule.degree = 2 * n - 1;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  const Real tol = pow2(-(bits - 8));
  std::vector<Real> val(n + 1), der(n + 1);
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    // i-th largest root; Chebyshev-like initial guess.
    double guess = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    Real x(guess);
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      legendre_values_derivs(x, n, val, der);
      Real dx = val[n] / der[n];
      x -= dx;
      if (abs(dx) <= tol) {
        converged = true;
        // One polishing step once inside the tolerance.
        legendre_values_derivs(x, n, val, der);
        x -= val[n] / der[n];
        break;
      }
    }
    if (!converged) {
      throw ConvergenceError("Gauss-Legendre root " + std::to_string(i) + " of n=" + std::to_string(n) +
                             " did not converge at " + std::to_string(bits) + " bits");
    }
    legendre_values_derivs(x, n, val, der);
    Real w = Real(2) / ((Real(1) - x * x) * der[n] * der[n]);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[n - 1 - i] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) {
    Real zero(0);
    legendre_values_derivs(zero, n, val, der);
    rule.nodes[half] = zero;
    rule.weights[half] = Real(2) / (der[n] * der[n]);
  }
  return rule;
}

Real dot(std::span<const Real> a, std::span<const Real> b) {
  Real s(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Real vector_norm2(std::span<const Real> v) {
  Real s(0);
  for (const Real& x : v) s += x * x;
  return sqrt(s);
}

namespace {

// Solves a x = b for symmetric positive definite a by Cholesky factorization
// with symmetric diagonal pivoting, P a P^T = L L^T. Consumes a.
DenseVector pivoted_cholesky_solve(DenseMatrix& a, const DenseVector& b) {
  const std::size_t n = a.rows();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  const Real threshold = pow2(-(working_precision() / 2));
  Real largest(0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (a(i, i) > a(best, best)) best = i;
    }
    if (best != k) {
      std::swap(perm[k], perm[best]);
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(best, j));
      for (std::size_t i = 0; i < n; ++i) std::swap(a(i, k), a(i, best));
    }
    const Real& pivot = a(k, k);
    if (k == 0) largest = pivot;
    if (!(pivot > threshold * largest) || !(pivot > Real(0))) {
      throw InversionFailure("normal matrix pivot " + std::to_string(k) + " below threshold");
    }
    Real lkk = sqrt(pivot);
    a(k, k) = lkk;
    for (std::size_t i = k + 1; i < n; ++i) a(i, k) /= lkk;
    // Keep the trailing block fully symmetric so later pivot swaps stay valid.
    for (std::size_t j = k + 1; j < n; ++j) {
      for (std::size_t i = j; i < n; ++i) {
        a(i, j) -= a(i, k) * a(j, k);
        if (i != j) a(j, i) = a(i, j);
      }
    }
  }

  DenseVector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    Real s = b[perm[i]];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * y[k];
    y[i] = s / a(i, i);
  }
  DenseVector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    Real s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * x[k];
    x[ii] = s / a(ii, ii);
  }
  DenseVector out(n);
  for (std::size_t i = 0; i < n; ++i) out[perm[i]] = x[i];
  return out;
}

}  // namespace

DenseVector solve_damped_normal(const DenseMatrix& jac, std::span<const Real> r, const Real& lambda) {
  const std::size_t m = jac.rows();
  const std::size_t nv = jac.cols();
  if (r.size() != m) throw Error("solve_damped_normal: residual length mismatch");

  // Active columns: those with a nonzero diagonal entry of J^T J.
  std::vector<std::size_t> active;
  std::vector<Real> diag(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    Real d(0);
    for (std::size_t i = 0; i < m; ++i) d += jac(i, j) * jac(i, j);
    diag[j] = d;
    if (!d.is_zero()) active.push_back(j);
  }
  const std::size_t n = active.size();
  DenseVector dv(nv, Real(0));
  if (n == 0) return dv;

  if (n > m && lambda > Real(0)) {
    // Wide systems: (J^T J + lambda D) dv = -J^T r is solved through
    // dv = D^-1 J^T y with (J D^-1 J^T + lambda I) y = -r.
    DenseMatrix a(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k <= i; ++k) {
        Real s(0);
        for (std::size_t j : active) s += jac(i, j) * jac(k, j) / diag[j];
        a(i, k) = s;
        a(k, i) = s;
      }
      a(i, i) += lambda;
    }
    DenseVector rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = -r[i];
    const DenseVector y = pivoted_cholesky_solve(a, rhs);
    for (std::size_t j : active) {
      Real s(0);
      for (std::size_t i = 0; i < m; ++i) s += jac(i, j) * y[i];
      dv[j] = s / diag[j];
    }
    return dv;
  }

  DenseMatrix a(n, n);
  DenseVector rhs(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t jp = active[p];
    for (std::size_t q = 0; q <= p; ++q) {
      const std::size_t jq = active[q];
      Real s(0);
      for (std::size_t i = 0; i < m; ++i) s += jac(i, jp) * jac(i, jq);
      a(p, q) = s;
      a(q, p) = s;
    }
    a(p, p) += lambda * diag[jp];
    Real g(0);
    for (std::size_t i = 0; i < m; ++i) g += jac(i, jp) * r[i];
    rhs[p] = -g;
  }
  const DenseVector x = pivoted_cholesky_solve(a, rhs);
  for (std::size_t i = 0; i < n; ++i) dv[active[i]] = x[i];
  return dv;
}

}  // namespace spiquad
