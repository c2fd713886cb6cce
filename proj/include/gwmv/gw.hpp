#pragma once

#include "gwmv/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gwmv {

struct GwSolveConfig {
  int max_iters = 500;
  /// Relative objective-change stopping threshold.
  double tol = 1e-9;
  /// Starting plan; the product coupling when empty.
  std::optional<TransportPlan> init;

  void check() const;
};

struct GwResult {
  TransportPlan plan;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Quadratic GW objective sum_{ijkl} (Dx_ik - Dy_jl)^2 T_ij T_kl for an
/// arbitrary nonnegative T, evaluated through the decomposition with the
/// actual marginals of T. Dx and Dy must be symmetric.
double gw_cost(const Matrix& dx, const Matrix& dy, const Matrix& plan);
double gw_cost(const DistanceMatrix& dx, const DistanceMatrix& dy, const TransportPlan& plan);

/// Gradient of gw_cost with respect to the plan entries:
/// G = 2 (c - 2 Dx T Dy^T), c_ij = (Dx^2 mu)_i + (Dy^2 nu)_j.
Matrix gw_gradient_wrt_plan(const Matrix& dx, const Matrix& dy, const Matrix& plan);
Matrix gw_gradient_wrt_plan(const DistanceMatrix& dx, const DistanceMatrix& dy, const TransportPlan& plan);

/// Conditional gradient with exact line search over couplings of (mu, nu).
GwResult solve_gw(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                  const DiscreteMeasure& nu, const GwSolveConfig& cfg = {});

/// Same scheme over the semi-relaxed polytope (row marginal fixed to mu).
GwResult solve_srgw(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                    const GwSolveConfig& cfg = {});

struct RestartOptions {
  /// Total number of starts: cfg.init (or the product coupling) plus
  /// restarts - 1 seeded random feasible plans.
  int restarts = 3;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Runs independent starts and keeps the lowest cost; ties go to the lower
/// restart index.
GwResult solve_gw_multistart(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                             const DiscreteMeasure& nu, const GwSolveConfig& cfg, const RestartOptions& opts);
GwResult solve_srgw_multistart(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                               const GwSolveConfig& cfg, const RestartOptions& opts);

/// Random strictly positive coupling of (mu, nu), Sinkhorn-scaled until both
/// marginals hold to 1e-13.
TransportPlan random_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, std::uint64_t seed);
/// Random strictly positive semi-relaxed plan with rows summing to mu.
TransportPlan random_semi_relaxed_plan(const DiscreteMeasure& mu, Index cols, std::uint64_t seed);

/// Process-wide record of solver contract checks, updated after every
/// conditional-gradient iteration of every solve.
struct SolverAudit {
  long runs = 0;
  long iterations = 0;
  double max_marginal_error = 0.0;
  /// Largest positive step between consecutive objective_trace entries.
  double max_trace_increase = 0.0;
};

SolverAudit solver_audit();
void reset_solver_audit();

}  // namespace gwmv
