#pragma once

// Levenberg-Marquardt solver for the orbit-reduced moment equations.
//
// Variables are laid out orbit by orbit: the orbit's chart parameters in
// (0, 1) followed by its weight in (0, inf). In exponential mode they are
// replaced by z with x = 1/(1 + e^{-s z}) and w = e^{s z}, so every iterate is
// positive and interior by construction. In Cartesian mode each step is
// shortened to stay inside the bounds.

#include "spiquad/polybasis.hpp"

#include <string_view>
#include <span>
#include <vector>

namespace spiquad {

enum class Parameterization { cartesian, exponential };

/// fast: 113 bits, tolerance 1e-30; full: 256 bits, tolerance 1e-66.
enum class PrecisionMode { fast, full };

int mode_bits(PrecisionMode m);
/// Residual tolerance for the mode, at the working precision.
Real mode_tolerance(PrecisionMode m);
PrecisionMode parse_mode(std::string_view name);

struct SolverConfig {
  Parameterization parameterization = Parameterization::exponential;
  Real scale{0.01};
  Real tolerance{1e-30};
  int check_interval = 0;  // 0 selects check_interval_for(n_vars)
  int max_iterations = 500;
  Real lambda0{1e-3};
  Real lambda_up{2};
  Real lambda_down{3};
  /// Fall back to a Cartesian step when the exponential system is singular.
  bool hybrid = true;

  static SolverConfig for_mode(PrecisionMode m);
};

enum class SolveStatus { converged, stalled_at_check, max_iterations, degenerate };
std::string_view to_string(SolveStatus s);

struct SolveOutcome {
  QuadRule rule;
  std::vector<Real> residual_history;  // entry 0 is the initial residual
  SolveStatus status = SolveStatus::max_iterations;
  int iterations = 0;
  int accepted_steps = 0;
  int fallback_events = 0;

  bool converged() const { return status == SolveStatus::converged; }
  const Real& final_residual() const { return residual_history.back(); }
};

/// clamp(20 + n_vars/8, 20, 70)
int check_interval_for(std::size_t n_vars);

std::size_t variable_count(const QuadRule& rule);
DenseVector encode(const QuadRule& rule, Parameterization p, const Real& scale);
/// Decodes `v` into a copy of `shape` (same orbits and symmetries).
QuadRule decode(const QuadRule& shape, std::span<const Real> v, Parameterization p, const Real& scale);

struct Bound {
  Real lo;
  Real hi;
  bool has_hi = true;
};

std::vector<Bound> variable_bounds(const QuadRule& rule);

/// Scales dv by the largest alpha in (0, 1] keeping v + alpha dv at least
/// eps = 2^-precision inside every bound. Throws ZeroStep when alpha <= 0.
DenseVector project_step(std::span<const Real> v, std::span<const Real> dv, std::span<const Bound> bounds);

/// Residual vector V^T w - f and, if `jac` is given, its Jacobian with
/// respect to the variables of `p`.
DenseVector residual_jacobian(const QuadRule& rule, const ObjectiveBasis& basis, Parameterization p,
                              const Real& scale, DenseMatrix* jac);

/// True when two nodes of one orbit coincide within coincidence_tolerance().
bool orbit_degenerate(const Orbit& orbit, DomainKind d);
/// True when any orbit is degenerate, two orbits share a node, or a parameter
/// lies within coincidence_tolerance() of 0 or 1.
bool rule_degenerate(const QuadRule& rule);

SolveOutcome lma_solve(const QuadRule& rule, const ObjectiveBasis& basis, const SolverConfig& config);

}  // namespace spiquad
