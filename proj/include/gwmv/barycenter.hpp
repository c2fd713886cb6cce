#pragma once

#include "gwmv/core.hpp"
#include "gwmv/gw.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace gwmv {

struct RandomSymmetricInit {
  std::uint64_t seed = 0;
};
struct FirstViewInit {};
struct GivenBarycenterInit {
  DistanceMatrix matrix;
};

using BarycenterInit = std::variant<RandomSymmetricInit, FirstViewInit, GivenBarycenterInit>;

struct BarycenterConfig {
  Index support_size = 0;
  /// Per-view weights; uniform when empty.
  std::vector<double> weights;
  int outer_iters = 50;
  /// Relative Frobenius change of the barycenter below which iteration stops.
  double tol = 1e-7;
  GwSolveConfig inner;
  BarycenterInit init = RandomSymmetricInit{};
  /// Independent barycenter runs; run 0 uses `init`, the others random
  /// symmetric starts seeded from restart_seed. Lowest objective wins.
  int restarts = 1;
  /// Starts per inner solve; start 0 is always the warm start.
  int inner_restarts = 1;
  std::uint64_t restart_seed = 0;
  int threads = 1;
  /// Per-view sample measures; uniform when empty.
  std::vector<DiscreteMeasure> view_measures;
};

struct BarycenterResult {
  DistanceMatrix barycenter;
  std::vector<TransportPlan> plans;
  /// Weighted GW objective after each round of inner solves.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  /// True when the last round increased the objective and was rolled back.
  bool stopped_on_increase = false;

  double objective() const { return objective_trace.back(); }
};

/// Block-coordinate GW barycenter with support measure p.
BarycenterResult gw_barycenter(const MultiViewDataset& views, const DiscreteMeasure& p, const BarycenterConfig& cfg);

/// sum_s w_s GW^2(D_s, Dbar) with one solve_gw per view (uniform view measures).
double barycenter_objective(const MultiViewDataset& views, const std::vector<double>& weights,
                            const DistanceMatrix& dbar, const DiscreteMeasure& p, const GwSolveConfig& cfg = {});

/// Closed-form barycenter for fixed plans: (sum_s w_s T_s^T D_s T_s) / (p p^T),
/// symmetrized with a zero diagonal.
Matrix barycenter_update(const std::vector<const Matrix*>& views, const std::vector<double>& weights,
                         const std::vector<const Matrix*>& plans, const Vector& p);

}  // namespace gwmv
