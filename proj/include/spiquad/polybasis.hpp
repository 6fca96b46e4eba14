#pragma once

// Orthonormal polynomial bases, symmetry-reduced objective bases, reference
// quadratures and moment residuals.
//
// Every basis function is stored as a linear combination of "generators"
// whose values and gradients are cheap to evaluate. Full bases use normalized
// Legendre products on every domain. Objective bases use them on the line,
// square, cube and pyramid; on the simplices and the prism they use the
// invariants e2^i e3^j (e4^k) of the centred barycentric coordinates, times a
// normalized Legendre polynomial in z for the prism.

#include "spiquad/domains.hpp"

#include <array>
#include <span>
#include <vector>

namespace spiquad {

/// Tensor/collapsed Gauss-Legendre rule, exact for total degree <= `degree`.
std::vector<Node> reference_quadrature(DomainKind d, int degree);

/// dim P_q: number of monomials of total degree <= q.
std::size_t polynomial_space_size(DomainKind d, int q);

class PolynomialSet {
public:
  DomainKind domain() const noexcept { return domain_; }
  int degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return rows_.size(); }
  /// Exact integrals: sqrt(volume) for the first function, zero otherwise.
  const DenseVector& moments() const noexcept { return moments_; }

  void evaluate(const Point& x, std::span<Real> out) const;
  /// grad is resized to size() x dimension.
  void evaluate(const Point& x, std::span<Real> out, DenseMatrix& grad) const;

protected:
  struct Term {
    std::size_t gen;
    Real coef;
  };
  // Generator exponents; meaning depends on the domain (see file comment).
  using Exponents = std::array<int, 3>;

  PolynomialSet(DomainKind d, int q, bool legendre) : domain_(d), degree_(q), legendre_(legendre) {}
  void generator_values(const Point& x, std::vector<Real>& g, std::vector<Real>* grad) const;
  /// Orthonormalizes pre-functions (sparse rows over generators) with a
  /// reference quadrature and two Gram-Schmidt passes.
  void orthonormalize(const std::vector<std::vector<Term>>& pre);
  void finish_moments();

  DomainKind domain_;
  int degree_;
  bool legendre_;
  std::vector<Exponents> gens_;
  std::vector<std::vector<Term>> rows_;
  DenseVector moments_;
};

/// Orthonormal basis of P_q under the uniform measure of the domain.
class OrthoBasis : public PolynomialSet {
public:
  OrthoBasis(DomainKind d, int q);
};

/// Orthonormal basis of the group-invariant part of P_q. Moment equations of
/// all other basis functions hold automatically for fully symmetric rules.
class ObjectiveBasis : public PolynomialSet {
public:
  ObjectiveBasis(DomainKind d, int q);
};

/// Expanded Vandermonde: one row per node, V(j, i) = u_i(x_j).
DenseMatrix vandermonde(const QuadRule& rule, const PolynomialSet& basis);
/// One row per orbit, evaluated at the orbit representative.
DenseMatrix reduced_vandermonde(const QuadRule& rule, const PolynomialSet& basis);

/// r = V^T w - f using the orbit-reduced form.
DenseVector residual_vector(const QuadRule& rule, const ObjectiveBasis& basis);
/// ||f - V^T w||_2 on the orbit-reduced form.
Real residual(const QuadRule& rule, const ObjectiveBasis& basis);
/// ||f - V^T w||_2 over an arbitrary node set.
Real residual(std::span<const Node> nodes, const PolynomialSet& basis);

}  // namespace spiquad
