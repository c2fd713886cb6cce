#include "gwmv/embedding.hpp"

#include "gwmv/parallel.hpp"
#include "gwmv/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>

namespace gwmv {
namespace {

/// Pieces of the objective that depend only on the plan:
/// f(Y) = constant + sum_jl q_j q_l E_jl^2 - 2 sum_jl B_jl E_jl, B = T^T D T.
struct PlanTerms {
  double constant = 0.0;
  Vector q;
  Matrix b;

  PlanTerms(const Matrix& d, const Matrix& plan) {
    const Vector mu = plan.rowwise().sum();
    constant = mu.dot(d.cwiseAbs2() * mu);
    q = plan.colwise().sum().transpose();
    b = plan.transpose() * d * plan;
    b = 0.5 * (b + b.transpose()).eval();
  }

  double objective(const Matrix& e) const {
    return constant + q.dot(e.cwiseAbs2() * q) - 2.0 * b.cwiseProduct(e).sum();
  }

  Matrix gradient(const Matrix& y, const Matrix& e) const {
    const Index m = y.rows();
    Matrix r(m, m);
    for (Index l = 0; l < m; ++l) {
      for (Index j = 0; j < m; ++j) {
        if (j == l || e(j, l) == 0.0) {
          r(j, l) = 0.0;
          continue;
        }
        const double w = -4.0 * (b(j, l) - e(j, l) * q(j) * q(l));
        r(j, l) = w / e(j, l);
      }
    }
    const Vector row = r.rowwise().sum();
    return row.asDiagonal() * y - r * y;
  }
};

void check_plan_shape(const Matrix& d, const Matrix& y, const Matrix& plan) {
  if (d.rows() != d.cols() || plan.rows() != d.rows() || plan.cols() != y.rows()) {
    throw Error(Errc::ShapeMismatch, "D is " + std::to_string(d.rows()) + "x" + std::to_string(d.cols()) +
                                         ", plan is " + std::to_string(plan.rows()) + "x" +
                                         std::to_string(plan.cols()) + ", embedding has " +
                                         std::to_string(y.rows()) + " points");
  }
}

double mean_off_diagonal(const Matrix& d) {
  const Index n = d.rows();
  return n < 2 ? 0.0 : d.sum() / static_cast<double>(n * (n - 1));
}

Matrix initial_points(const DistanceMatrix& d, Index count, const GwMdsConfig& cfg) {
  if (const auto* given = std::get_if<GivenEmbeddingInit>(&cfg.init)) {
    if (given->points.size() != count || given->points.dim() != cfg.dim) {
      throw Error(Errc::ShapeMismatch, "given embedding must be " + std::to_string(count) + "x" +
                                           std::to_string(cfg.dim));
    }
    return given->points.points();
  }
  const auto& random = std::get<RandomGaussianInit>(cfg.init);
  double scale = random.scale;
  if (!(scale > 0.0)) scale = mean_off_diagonal(d.values()) / std::sqrt(static_cast<double>(cfg.dim));
  if (!(scale > 0.0)) scale = 1.0;
  Rng rng(random.seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix y(count, cfg.dim);
  for (Index i = 0; i < count; ++i) {
    for (Index c = 0; c < cfg.dim; ++c) y(i, c) = normal(rng);
  }
  return y;
}

class PlanStep {
 public:
  PlanStep(const DistanceMatrix& d, const DiscreteMeasure& mu, const DiscreteMeasure& nu, const GwMdsConfig& cfg)
      : d_(d), mu_(mu), nu_(nu), cfg_(cfg) {}

  GwResult solve(const Matrix& e, const std::optional<TransportPlan>& start) const {
    const DistanceMatrix target = DistanceMatrix::validate(e);
    GwSolveConfig inner = cfg_.inner;
    inner.init = start;
    if (cfg_.plan_solver == PlanSolver::Full) return solve_gw(d_, mu_, target, nu_, inner);
    return solve_srgw(d_, mu_, target, inner);
  }

  /// Best of the default start, the identity correspondence (given
  /// embeddings of matching size only) and seeded random plans.
  GwResult first(const Matrix& e) const {
    std::vector<std::optional<TransportPlan>> starts{std::nullopt};
    const bool given = std::holds_alternative<GivenEmbeddingInit>(cfg_.init);
    if (given && mu_.size() == nu_.size() && (mu_.weights() - nu_.weights()).cwiseAbs().maxCoeff() <= 1e-15) {
      starts.emplace_back(TransportPlan::diagonal(mu_));
    }
    for (int r = 1; r < cfg_.initial_plan_restarts; ++r) {
      const std::uint64_t seed = derive_seed(cfg_.plan_seed, static_cast<std::uint64_t>(r));
      starts.emplace_back(cfg_.plan_solver == PlanSolver::Full ? random_coupling(mu_, nu_, seed)
                                                                : random_semi_relaxed_plan(mu_, nu_.size(), seed));
    }
    std::optional<GwResult> best;
    for (const auto& start : starts) {
      GwResult r = solve(e, start);
      if (!best || r.cost < best->cost) best = std::move(r);
    }
    return std::move(*best);
  }

 private:
  const DistanceMatrix& d_;
  const DiscreteMeasure& mu_;
  const DiscreteMeasure& nu_;
  const GwMdsConfig& cfg_;
};

}  // namespace

void GwMdsConfig::check() const {
  if (dim < 1) throw Error(Errc::InvalidConfig, "dim must be >= 1");
  if (!(lr > 0.0) || !(min_step > 0.0)) throw Error(Errc::InvalidConfig, "lr and min_step must be > 0");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw Error(Errc::InvalidConfig, "armijo_c1 must lie in (0, 1)");
  if (outer_iters < 1 || grad_steps_per_plan < 1) throw Error(Errc::InvalidConfig, "iteration counts must be >= 1");
  if (!(tol >= 0.0) || !(norm_smoothing_eps >= 0.0)) throw Error(Errc::InvalidConfig, "tol and eps must be >= 0");
  if (initial_plan_restarts < 1) throw Error(Errc::InvalidConfig, "initial_plan_restarts must be >= 1");
  inner.check();
}

double gw_embedding_objective(const Matrix& d, const Matrix& y, const Matrix& plan, double eps) {
  check_plan_shape(d, y, plan);
  return PlanTerms(d, plan).objective(pairwise_distances(y, eps));
}

Matrix gw_embedding_gradient(const Matrix& d, const Matrix& y, const Matrix& plan, double eps) {
  check_plan_shape(d, y, plan);
  return PlanTerms(d, plan).gradient(y, pairwise_distances(y, eps));
}

Matrix gw_embedding_gradient(const DistanceMatrix& d, const Embedding& y, const TransportPlan& plan, double eps) {
  return gw_embedding_gradient(d.values(), y.points(), plan.mass(), eps);
}

GwMdsResult gwmds_embed(const DistanceMatrix& d, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                        const GwMdsConfig& cfg) {
  cfg.check();
  if (d.size() != mu.size()) throw Error(Errc::ShapeMismatch, "|mu| differs from the size of D");
  const double eps = cfg.norm_smoothing_eps;
  // Objective values below this are zero loss up to rounding.
  const double zero_loss = 1e-12 * d.values().cwiseAbs2().maxCoeff();
  const PlanStep plans(d, mu, nu, cfg);

  Matrix y = initial_points(d, nu.size(), cfg);
  Matrix e = pairwise_distances(y, eps);
  GwResult solved = plans.first(e);
  TransportPlan plan = std::move(solved.plan);
  PlanTerms terms(d.values(), plan.mass());
  double f = terms.objective(e);

  std::vector<double> trace{f};
  std::vector<GwMdsTraceRow> rows{{0, f, 0.0, 0.0}};
  double step = cfg.lr;
  bool converged = false;
  bool stalled = false;
  int outer = 0;

  for (; outer < cfg.outer_iters && !converged && !stalled; ++outer) {
    const double f_start = f;
    bool block_stalled = false;
    for (int s = 0; s < cfg.grad_steps_per_plan; ++s) {
      const Matrix g = terms.gradient(y, e);
      const double g2 = g.squaredNorm();
      if (g2 == 0.0) break;
      bool accepted = false;
      while (step >= cfg.min_step) {
        Matrix y_try = y - step * g;
        Matrix e_try = pairwise_distances(y_try, eps);
        const double f_try = terms.objective(e_try);
        if (f_try <= f - cfg.armijo_c1 * step * g2) {
          y = std::move(y_try);
          e = std::move(e_try);
          f = f_try;
          trace.push_back(f);
          rows.push_back({outer + 1, f, std::sqrt(g2), step});
          step *= 2.0;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        step = cfg.lr;
        block_stalled = true;
        break;
      }
    }

    std::optional<TransportPlan> start;
    if (cfg.warm_start) start = plan;
    GwResult next = plans.solve(e, start);
    PlanTerms next_terms(d.values(), next.plan.mass());
    const double f_plan = next_terms.objective(e);
    const bool plan_improved = f_plan < f;
    if (plan_improved) {
      plan = std::move(next.plan);
      terms = std::move(next_terms);
      f = f_plan;
      trace.push_back(f);
      rows.push_back({outer + 1, f, 0.0, 0.0});
    }

    const double change = f_start - f;
    if (change <= cfg.tol * std::abs(f_start) + 1e-300) {
      converged = true;
    } else if (block_stalled && !plan_improved) {
      if (f <= zero_loss) {
        converged = true;
      } else {
        stalled = true;
      }
    }
  }

  const double cost = std::max(0.0, gw_cost(d.values(), pairwise_distances(y), plan.mass()));
  return GwMdsResult{Embedding::from_points(std::move(y)), std::move(plan), cost, std::move(trace), std::move(rows),
                     outer, converged, stalled};
}

GwMdsResult gwmds_embed_multistart(const DistanceMatrix& d, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   const GwMdsConfig& cfg, int restarts, std::uint64_t seed, int threads) {
  if (restarts < 1) throw Error(Errc::InvalidConfig, "restarts must be >= 1");
  std::vector<std::optional<GwMdsResult>> runs(static_cast<std::size_t>(restarts));
  parallel_for(runs.size(), threads, [&](std::size_t r) {
    GwMdsConfig local = cfg;
    if (r > 0) {
      double scale = 0.0;
      if (const auto* random = std::get_if<RandomGaussianInit>(&cfg.init)) scale = random->scale;
      local.init = RandomGaussianInit{derive_seed(seed, static_cast<std::uint64_t>(r)), scale};
      local.plan_seed = derive_seed(derive_seed(seed, "plan"), static_cast<std::uint64_t>(r));
    }
    runs[r] = gwmds_embed(d, mu, nu, local);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r]->cost < runs[best]->cost) best = r;
  }
  return std::move(*runs[best]);
}

Embedding classical_mds(const DistanceMatrix& d, Index dim) {
  const Index n = d.size();
  if (dim < 1 || dim > n) throw Error(Errc::InvalidConfig, "dim must lie in [1, n]");
  const Matrix centering = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const Matrix gram = -0.5 * centering * d.values().cwiseAbs2() * centering;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(Errc::NotConverged, "eigendecomposition failed");
  Matrix y(n, dim);
  for (Index c = 0; c < dim; ++c) {
    const Index col = n - 1 - c;
    Vector v = eig.eigenvectors().col(col);
    // Fix the sign so the largest-magnitude entry is positive.
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    y.col(c) = v * std::sqrt(std::max(0.0, eig.eigenvalues()(col)));
  }
  return Embedding::from_points(std::move(y));
}

}  // namespace gwmv
