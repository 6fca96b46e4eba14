#pragma once

// Extended-precision numerics: Gauss-Legendre rules, small dense matrices,
// and the damped normal-equation solve used by the Levenberg-Marquardt driver.

#include "spiquad/errors.hpp"
#include "spiquad/real.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace spiquad {

using DenseVector = std::vector<Real>;

/// Row-major rectangular matrix of Reals.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Real& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Real& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<Real> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const Real> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

/// Gauss-Legendre rule on (-1, 1).
struct Rule1D {
  std::vector<Real> nodes;    // strictly increasing, symmetric about 0
  std::vector<Real> weights;  // positive, symmetric
  int degree = 0;             // 2n - 1
};

/// n-point Gauss-Legendre rule computed at `bits` of precision.
///
/// Roots come from Newton iteration on the three-term Legendre recurrence,
/// seeded with Chebyshev-like guesses. Only the positive half is refined; the
/// negative half is mirrored so that the rule is exactly symmetric. Throws
/// ConvergenceError if a root fails to settle within a bounded number of steps.
Rule1D gauss_legendre(int n, int bits);

/// Smallest odd count A with 2A - 1 >= degree.
int min_odd_gauss_points(int degree);
/// Smallest count E with 2E - 1 >= degree.
int min_gauss_points(int degree);

/// Values of the Legendre polynomials P_0..P_n at x (unnormalized).
void legendre_values(const Real& x, int n, std::span<Real> out);
/// Values and first derivatives of P_0..P_n at x.
void legendre_values_derivs(const Real& x, int n, std::span<Real> val, std::span<Real> der);

/// Jacobi polynomials P_k^{(a,0)}(x), k = 0..n.
void jacobi_values(const Real& x, int a, int n, std::span<Real> out);

/// Solves (J^T J + lambda * diag(J^T J)) dv = -J^T r.
///
/// The normal matrix is factored with a diagonally pivoted Cholesky
/// decomposition. Columns of J that are identically zero are frozen (their
/// step component is zero). InversionFailure is thrown when a pivot falls
/// below 2^-(precision/2) times the largest pivot.
DenseVector solve_damped_normal(const DenseMatrix& jac, std::span<const Real> r, const Real& lambda);

/// Euclidean norm.
Real vector_norm2(std::span<const Real> v);

Real dot(std::span<const Real> a, std::span<const Real> b);

}  // namespace spiquad
