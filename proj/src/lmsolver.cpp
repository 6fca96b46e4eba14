#include "spiquad/lmsolver.hpp"

#include <algorithm>
#include <optional>
#include <string>

namespace spiquad {

namespace {

Real logistic(const Real& z, const Real& s) { return Real(1) / (Real(1) + exp(-s * z)); }

bool rule_valid(const QuadRule& rule) {
  for (const auto& o : rule.orbits) {
    if (!(o.weight > Real(0)) || !o.weight.is_finite()) return false;
    if (!params_valid(o.params)) return false;
  }
  return true;
}

Real max_abs_diff(const Point& a, const Point& b) {
  Real m(0);
  for (std::size_t k = 0; k < a.size(); ++k) m = max(m, abs(a[k] - b[k]));
  return m;
}

}  // namespace

int mode_bits(PrecisionMode m) { return m == PrecisionMode::fast ? 113 : 256; }

Real mode_tolerance(PrecisionMode m) { return m == PrecisionMode::fast ? Real::parse("1e-30") : Real::parse("1e-66"); }

PrecisionMode parse_mode(std::string_view name) {
  if (name == "fast") return PrecisionMode::fast;
  if (name == "full") return PrecisionMode::full;
  throw Error("unknown mode '" + std::string(name) + "'");
}

SolverConfig SolverConfig::for_mode(PrecisionMode m) {
  SolverConfig c;
  c.tolerance = mode_tolerance(m);
  c.scale = Real::parse("0.01");
  c.lambda0 = Real::parse("1e-3");
  return c;
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "Converged";
    case SolveStatus::stalled_at_check: return "StalledAtCheck";
    case SolveStatus::max_iterations: return "MaxIterations";
    case SolveStatus::degenerate: return "Degenerate";
  }
  return "?";
}

int check_interval_for(std::size_t n_vars) {
  return std::clamp(20 + static_cast<int>(n_vars / 8), 20, 70);
}

std::size_t variable_count(const QuadRule& rule) {
  std::size_t n = 0;
  for (const auto& o : rule.orbits) n += o.params.size() + 1;
  return n;
}

DenseVector encode(const QuadRule& rule, Parameterization p, const Real& scale) {
  DenseVector v;
  v.reserve(variable_count(rule));
  for (const auto& o : rule.orbits) {
    for (const auto& u : o.params) {
      v.push_back(p == Parameterization::cartesian ? u : log(u / (Real(1) - u)) / scale);
    }
    v.push_back(p == Parameterization::cartesian ? o.weight : log(o.weight) / scale);
  }
  return v;
}

QuadRule decode(const QuadRule& shape, std::span<const Real> v, Parameterization p, const Real& scale) {
  QuadRule r = shape;
  std::size_t k = 0;
  for (auto& o : r.orbits) {
    for (auto& u : o.params) {
      u = p == Parameterization::cartesian ? v[k] : logistic(v[k], scale);
      ++k;
    }
    o.weight = p == Parameterization::cartesian ? v[k] : exp(scale * v[k]);
    ++k;
  }
  return r;
}

std::vector<Bound> variable_bounds(const QuadRule& rule) {
  std::vector<Bound> b;
  for (const auto& o : rule.orbits) {
    for (std::size_t i = 0; i < o.params.size(); ++i) b.push_back({Real(0), Real(1), true});
    b.push_back({Real(0), Real(0), false});
  }
  return b;
}

DenseVector project_step(std::span<const Real> v, std::span<const Real> dv, std::span<const Bound> bounds) {
  const Real eps = epsilon();
  Real alpha(1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    Real next = v[i] + dv[i];
    if (bounds[i].has_hi && next > bounds[i].hi - eps) {
      alpha = min(alpha, (bounds[i].hi - eps - v[i]) / dv[i]);
    } else if (next < bounds[i].lo + eps) {
      alpha = min(alpha, (bounds[i].lo + eps - v[i]) / dv[i]);
    }
  }
  if (!(alpha > Real(0))) throw ZeroStep("step scaling factor vanished at a bound");
  DenseVector out(dv.begin(), dv.end());
  if (!(alpha < Real(1))) return out;
  // Rounding in v + alpha dv can land on the bound itself; back off until strictly inside.
  const Real shrink = Real(1) - pow2(-(working_precision() / 2));
  for (int attempt = 0; attempt < 64; ++attempt) {
    bool inside = true;
    for (std::size_t i = 0; i < v.size() && inside; ++i) {
      Real next = v[i] + alpha * dv[i];
      inside = next > bounds[i].lo && (!bounds[i].has_hi || next < bounds[i].hi);
    }
    if (inside) {
      for (auto& x : out) x *= alpha;
      return out;
    }
    alpha *= shrink;
  }
  throw ZeroStep("step scaling factor vanished at a bound");
}

DenseVector residual_jacobian(const QuadRule& rule, const ObjectiveBasis& basis, Parameterization p,
                              const Real& scale, DenseMatrix* jac) {
  const std::size_t m = basis.size();
  const std::size_t dim = static_cast<std::size_t>(dimension(rule.domain));
  DenseVector r(m);
  for (std::size_t k = 0; k < m; ++k) r[k] = -basis.moments()[k];
  if (jac) *jac = DenseMatrix(m, variable_count(rule));

  std::vector<Real> u(m);
  DenseMatrix grad;
  std::size_t col = 0;
  for (const auto& o : rule.orbits) {
    const Point x = chart(rule.domain, o.symmetry, o.params);
    const Real size(symmetry_class(rule.domain, o.symmetry).orbit_size);
    const Real sw = size * o.weight;
    if (!jac) {
      basis.evaluate(x, u);
      for (std::size_t k = 0; k < m; ++k) r[k] += sw * u[k];
      continue;
    }
    basis.evaluate(x, u, grad);
    for (std::size_t k = 0; k < m; ++k) r[k] += sw * u[k];

    const DenseMatrix dx = chart_jacobian(rule.domain, o.symmetry, o.params);
    for (std::size_t pi = 0; pi < o.params.size(); ++pi) {
      Real chain = sw;
      if (p == Parameterization::exponential) chain *= scale * o.params[pi] * (Real(1) - o.params[pi]);
      for (std::size_t k = 0; k < m; ++k) {
        Real s(0);
        for (std::size_t c = 0; c < dim; ++c) s += grad(k, c) * dx(c, pi);
        (*jac)(k, col + pi) = chain * s;
      }
    }
    col += o.params.size();
    Real wchain = size;
    if (p == Parameterization::exponential) wchain *= scale * o.weight;
    for (std::size_t k = 0; k < m; ++k) (*jac)(k, col) = wchain * u[k];
    ++col;
  }
  return r;
}

bool orbit_degenerate(const Orbit& orbit, DomainKind d) {
  const auto& c = symmetry_class(d, orbit.symmetry);
  const auto& group = symmetry_group(d);
  const Point rep = chart(d, orbit.symmetry, orbit.params);
  const Real tol = coincidence_tolerance();
  std::size_t fixed = 0;
  for (const auto& g : group) {
    if (max_abs_diff(g.apply(rep), rep) <= tol) ++fixed;
  }
  return fixed * static_cast<std::size_t>(c.orbit_size) != group.size();
}

bool rule_degenerate(const QuadRule& rule) {
  const Real tol = coincidence_tolerance();
  std::vector<Point> reps;
  for (const auto& o : rule.orbits) {
    if (orbit_degenerate(o, rule.domain)) return true;
    for (const auto& u : o.params) {
      if (!(u > tol) || !(u < Real(1) - tol)) return true;
    }
    reps.push_back(chart(rule.domain, o.symmetry, o.params));
  }
  const auto& group = symmetry_group(rule.domain);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      if (rule.orbits[i].symmetry != rule.orbits[j].symmetry) continue;
      for (const auto& g : group) {
        if (max_abs_diff(g.apply(reps[j]), reps[i]) <= tol) return true;
      }
    }
  }
  return false;
}

SolveOutcome lma_solve(const QuadRule& rule, const ObjectiveBasis& basis, const SolverConfig& config) {
  SolveOutcome out;
  out.rule = rule;
  DenseMatrix jac;
  DenseVector r = residual_jacobian(rule, basis, config.parameterization, config.scale, nullptr);
  Real res = vector_norm2(r);
  out.residual_history.push_back(res);
  if (res < config.tolerance) {
    out.status = SolveStatus::converged;
    return out;
  }

  const Real r0 = res;
  const std::size_t n_vars = variable_count(rule);
  const int interval = config.check_interval > 0 ? config.check_interval : check_interval_for(n_vars);
  Real lambda = config.lambda0;
  Real threshold = r0;
  QuadRule current = rule;

  for (int it = 1; it <= config.max_iterations; ++it) {
    out.iterations = it;
    std::optional<QuadRule> candidate;
    Parameterization mode = config.parameterization;
    r = residual_jacobian(current, basis, mode, config.scale, &jac);
    try {
      DenseVector dv = solve_damped_normal(jac, r, lambda);
      DenseVector v = encode(current, mode, config.scale);
      if (mode == Parameterization::cartesian) dv = project_step(v, dv, variable_bounds(current));
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += dv[i];
      candidate = decode(current, v, mode, config.scale);
    } catch (const InversionFailure&) {
      if (mode == Parameterization::exponential && config.hybrid) {
        ++out.fallback_events;
        try {
          r = residual_jacobian(current, basis, Parameterization::cartesian, config.scale, &jac);
          DenseVector dv = solve_damped_normal(jac, r, lambda);
          DenseVector v = encode(current, Parameterization::cartesian, config.scale);
          dv = project_step(v, dv, variable_bounds(current));
          for (std::size_t i = 0; i < v.size(); ++i) v[i] += dv[i];
          candidate = decode(current, v, Parameterization::cartesian, config.scale);
        } catch (const InversionFailure&) {
        } catch (const ZeroStep&) {
        }
      }
    } catch (const ZeroStep&) {
    }

    bool accepted = false;
    if (candidate && rule_valid(*candidate)) {
      Real trial = vector_norm2(residual_jacobian(*candidate, basis, mode, config.scale, nullptr));
      if (trial < res) {
        accepted = true;
        current = std::move(*candidate);
        res = trial;
        ++out.accepted_steps;
      }
    }
    if (accepted) {
      lambda /= config.lambda_down;
    } else {
      lambda *= config.lambda_up;
    }
    out.residual_history.push_back(res);

    if (accepted) {
      bool degenerate = false;
      for (const auto& o : current.orbits) degenerate = degenerate || orbit_degenerate(o, current.domain);
      if (degenerate) {
        out.rule = current;
        out.status = SolveStatus::degenerate;
        return out;
      }
    }
    if (res < config.tolerance) {
      out.rule = current;
      out.status = rule_degenerate(current) ? SolveStatus::degenerate : SolveStatus::converged;
      return out;
    }
    if (it % interval == 0) {
      threshold /= Real(10);
      if (!(res < threshold)) {
        out.rule = current;
        out.status = SolveStatus::stalled_at_check;
        return out;
      }
    }
  }
  out.rule = current;
  out.status = SolveStatus::max_iterations;
  return out;
}

}  // namespace spiquad
