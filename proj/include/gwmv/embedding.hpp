#pragma once

#include "gwmv/core.hpp"
#include "gwmv/gw.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace gwmv {

struct RandomGaussianInit {
  std::uint64_t seed = 0;
  /// Standard deviation of the coordinates; <= 0 selects mean(D) / sqrt(dim).
  double scale = 0.0;
};
struct GivenEmbeddingInit {
  Embedding points;
};

using EmbeddingInit = std::variant<RandomGaussianInit, GivenEmbeddingInit>;

enum class PlanSolver { Full, SemiRelaxed };

struct GwMdsConfig {
  Index dim = 2;
  /// Initial gradient step. Armijo backtracking halves it down to min_step;
  /// each accepted step doubles the next trial step.
  double lr = 0.01;
  double min_step = 1e-8;
  double armijo_c1 = 1e-4;
  int outer_iters = 300;
  int grad_steps_per_plan = 10;
  /// Relative objective change per outer iteration below which we stop.
  double tol = 1e-8;
  EmbeddingInit init = RandomGaussianInit{};
  double norm_smoothing_eps = 1e-12;
  PlanSolver plan_solver = PlanSolver::Full;
  GwSolveConfig inner;
  /// Reuse the previous plan as the starting point of each plan solve.
  bool warm_start = true;
  /// Starts for the very first plan solve (product/uniform plus random plans).
  int initial_plan_restarts = 3;
  std::uint64_t plan_seed = 0;

  void check() const;
};

struct GwMdsTraceRow {
  int iteration = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  double step_size = 0.0;
};

struct GwMdsResult {
  Embedding embedding;
  TransportPlan plan;
  /// GW objective between D and the unsmoothed distances of the embedding.
  double cost = 0.0;
  /// Smoothed objective after every plan solve and accepted gradient step.
  std::vector<double> objective_trace;
  std::vector<GwMdsTraceRow> rows;
  int outer_iterations = 0;
  bool converged = false;
  /// Backtracking hit min_step without a decrease.
  bool stalled = false;
};

/// GW-MDS: alternate plan solves between D and the embedding's distance matrix
/// with blocks of backtracking gradient steps on the coordinates. |nu| is the
/// number of embedding points.
GwMdsResult gwmds_embed(const DistanceMatrix& d, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const GwMdsConfig& cfg);

/// Independent runs; run 0 uses cfg.init, run r > 0 a Gaussian start seeded
/// by derive_seed(seed, r). Lowest cost wins, ties to the lower index.
GwMdsResult gwmds_embed_multistart(const DistanceMatrix& d, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const GwMdsConfig& cfg, int restarts, std::uint64_t seed, int threads = 1);

/// sum_{ijkl} (D_ik - |y_j - y_l|_eps)^2 T_ij T_kl with |v|_eps = sqrt(|v|^2 + eps)
/// off the diagonal and 0 on it.
double gw_embedding_objective(const Matrix& d, const Matrix& y, const Matrix& plan, double eps);

/// Gradient of gw_embedding_objective with respect to the coordinates.
Matrix gw_embedding_gradient(const Matrix& d, const Matrix& y, const Matrix& plan, double eps);
Matrix gw_embedding_gradient(const DistanceMatrix& d, const Embedding& y, const TransportPlan& plan, double eps);

/// Classical (Torgerson) MDS: top eigenvectors of the double-centered squared
/// distances, scaled by the square roots of their nonnegative eigenvalues.
Embedding classical_mds(const DistanceMatrix& d, Index dim);

}  // namespace gwmv
