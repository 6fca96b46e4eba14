#pragma once

// Rule certification, oscillatory test integrals on uniform meshes,
// convergence rates under refinement, and the efficiency metric.

#include "spiquad/polybasis.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace spiquad {

struct Certificate {
  int degree = 0;
  Real residual;
  bool positive = false;
  bool interior = false;
  bool symmetric = false;

  bool passed(const Real& tolerance) const { return residual < tolerance && positive && interior && symmetric; }
};

/// Moment residual at `degree` (objective basis) plus positivity, strict
/// interiority, and invariance of the expanded node set under every group
/// element to 2^-(precision-16).
Certificate certify(const QuadRule& rule, int degree);

/// Integral of cos(k . x) over [-1,1]^dim: prod 2 sin(k_i) / k_i.
Real exact_oscillatory(std::span<const int> k);

/// Affine image x = offset + a * xi of the reference element.
struct Element {
  Point offset;
  std::vector<std::vector<Real>> a;
  Real det;  // |det a|
};

struct Mesh {
  DomainKind domain = DomainKind::square;
  int level = 0;
  std::vector<Element> elements;
};

/// Uniform mesh of [-1,1]^dim with 2^level cells per axis. Prism meshes split
/// every cell into 2 prisms, pyramid meshes into 6 pyramids with apex at the
/// cell centre.
Mesh uniform_mesh(DomainKind d, int level);

using Integrand = std::function<Real(const Point&)>;

Real integrate_on_mesh(const QuadRule& rule, const Mesh& mesh, const Integrand& f);

struct ConvergenceReport {
  std::vector<int> levels;
  std::vector<Real> errors;
  /// rates[i] = log2(errors[i-1] / errors[i]); empty at level 0 and at or
  /// past the precision floor.
  std::vector<std::optional<double>> rates;
  Real exact;
  Real floor;

  /// Rate between the last two levels above the floor.
  std::optional<double> final_rate() const;
  /// final_rate(), or PrecisionFloor when none exists.
  double require_rate() const;
};

/// Errors against exact_oscillatory(k) on uniform_mesh levels 0..levels-1.
/// The floor is 10 * 2^-precision with precision at least 113 bits.
ConvergenceReport convergence_study(const QuadRule& rule, std::span<const int> k, int levels);

struct AuxCounts {
  std::optional<long> triangle;  // n_T(q)
  std::optional<long> square;    // n_S(q)
};

struct EfficiencyReport {
  int q = 0;
  long n = 0;
  long n_ref = 0;
  Real e;
};

/// Reference node count: A^2, A^3, A n_T(q) and ceil((q+3)/2) n_S(q) with
/// A = ceil((q+1)/2). Throws MissingData when a needed count is absent.
long reference_node_count(DomainKind d, int q, const AuxCounts& aux = {});

EfficiencyReport efficiency(int q, long n, DomainKind d, const AuxCounts& aux = {});

}  // namespace spiquad
