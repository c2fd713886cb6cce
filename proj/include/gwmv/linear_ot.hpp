#pragma once

#include "gwmv/core.hpp"

namespace gwmv {

struct LinearOtResult {
  Matrix plan;
  double cost = 0.0;
  long pivots = 0;
};

/// Exact discrete optimal transport min <C, X> over couplings of (a, b),
/// solved with a primal network simplex on the bipartite transportation graph
/// (strongly feasible spanning trees, block-search pricing).
///
/// Costs may be negative. `b` is rescaled to the mass of `a` before solving.
/// Throws Errc::LinearOtFailure when the pivot budget runs out or the
/// recovered plan misses a marginal by more than 1e-12.
LinearOtResult solve_linear_ot(const Vector& a, const Vector& b, const Matrix& cost);

}  // namespace gwmv
