#pragma once

// Initial rules for every domain and the node-elimination pipeline: orbit
// elimination by priority, orbit collapse onto lower-parameter symmetries,
// and the bundle-by-bundle driver that combines them.

#include "spiquad/lmsolver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace spiquad {

/// Symmetry bundles with matching priority numbers and a collapse threshold.
struct ReductionPlan {
  std::vector<std::vector<int>> bundles;
  std::vector<std::vector<Real>> priorities;
  Real collapse_threshold;

  /// Default bundles for target domains; one symmetry per bundle with
  /// priority 1 for the triangle and tetrahedron.
  static ReductionPlan for_domain(DomainKind d, int q);
  /// Priority number of a symmetry, 1 when it is in no bundle.
  Real priority_of(int symmetry) const;
};

enum class TraceAction { eliminate, collapse };

struct TraceEntry {
  TraceAction action = TraceAction::eliminate;
  int orbit = 0;            // position in the rule at the time of the attempt
  int symmetry = 0;         // symmetry of that orbit
  int target = 0;           // collapse target, 0 for eliminations
  bool accepted = false;
  SolveStatus status = SolveStatus::converged;
  Real residual;
  int iterations = 0;
};

struct EliminationTrace {
  std::vector<TraceEntry> entries;
};

/// A certified rule from outside the elimination pipeline.
struct ExternalRuleData {
  QuadRule rule;
  std::string source;
};

/// Supplies triangle and tetrahedron rules of at least the requested degree.
using AuxRuleSource = std::function<ExternalRuleData(DomainKind, int)>;

/// Tensor product of the minimal odd Gauss-Legendre rule, orbit-compressed.
QuadRule init_square(int q);
QuadRule init_cube(int q);

/// Adds an S1 orbit when the rule has none and re-solves at the rule's degree.
/// Throws SolveFailed when the re-solve does not converge.
QuadRule add_center(const QuadRule& rule, const SolverConfig& config);

/// Triangle rule (with its centroid) times the minimal odd Gauss-Legendre rule.
QuadRule init_prism(int q, const ExternalRuleData& tri, const SolverConfig& config);

/// Square rule scaled into each z-slice of a Gauss-Legendre rule of degree q+2.
QuadRule init_pyramid_algebraic(int q, const QuadRule& sq, const SolverConfig& config);

/// Triangle and tetrahedron nodes placed into the pyramid, filtered to the
/// fundamental sector, symmetrized, given equal weights, then solved.
/// Throws SolveFailed when the solve does not converge.
QuadRule init_pyramid_geometric(int q, const ExternalRuleData& tri, const ExternalRuleData& tet,
                                const SolverConfig& config);

/// The same node set before the solve (steps up to equal weights).
QuadRule pyramid_geometric_seed(int q, const ExternalRuleData& tri, const ExternalRuleData& tet);

/// Collapsed map of a cube rule onto the pyramid, exact to degree
/// floor(cube.degree / 2) - 1. Returns the plain node list.
std::vector<Node> init_pyramid_duffy(const QuadRule& cube);

/// p * w in Cartesian mode, log(p)/s + w_e in exponential mode, where w_e is
/// the exponential encoding of the orbit weight.
Real orbit_priority(const Orbit& orbit, const Real& p, Parameterization mode, const Real& scale);

/// Orbit elimination over the symmetries in `symmetries`.
QuadRule remove_orbits(const QuadRule& rule, std::vector<int> symmetries, std::vector<Real> priorities,
                       const SolverConfig& config, EliminationTrace* trace = nullptr);

/// One collapse pass over the orbits whose symmetry is in `symmetries`.
QuadRule collapse_orbits(const QuadRule& rule, const std::vector<int>& symmetries, const ReductionPlan& plan,
                         const SolverConfig& config, EliminationTrace* trace = nullptr);

struct Reduction {
  QuadRule rule;
  EliminationTrace trace;
};

Reduction remove_nodes(const QuadRule& rule, const ReductionPlan& plan, const SolverConfig& config);

/// remove_nodes, then restarts from fixed seeds until none is accepted: an
/// orbit is removed while another is re-seeded, or replaced by seeded orbits
/// of smaller classes with fewer nodes in total. With `split`, an orbit may
/// also become several lower-parameter orbits with the same node total.
Reduction reduce_with_restarts(const QuadRule& rule, const ReductionPlan& plan, const SolverConfig& config,
                               bool split = false);

/// Fully symmetric positive interior triangle or tetrahedron rule of degree q,
/// built from a symmetrized collapsed Gauss rule and reduced with
/// reduce_with_restarts.
QuadRule simplex_rule(DomainKind d, int q, const SolverConfig& config);

/// Source backed only by simplex_rule.
AuxRuleSource generated_aux_source(const SolverConfig& config);

enum class PyramidInit { geometric, algebraic };

struct BuildOptions {
  PrecisionMode mode = PrecisionMode::fast;
  SolverConfig solver = SolverConfig::for_mode(PrecisionMode::fast);
  std::optional<ReductionPlan> plan;
  PyramidInit pyramid_init = PyramidInit::geometric;
  /// reduce_with_restarts instead of plain remove_nodes.
  bool restarts = true;
  /// Square rule of degree >= q for the algebraic pyramid; generated if absent.
  std::optional<QuadRule> square_rule;
};

struct BuildResult {
  QuadRule initial;
  Reduction reduced;
  std::string init_method;
};

/// Initial rule followed by the reduction. Throws Error for even q on the
/// square or cube.
BuildResult build_rule(DomainKind d, int q, const BuildOptions& options, const AuxRuleSource& aux);

}  // namespace spiquad
