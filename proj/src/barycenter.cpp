#include "gwmv/barycenter.hpp"

#include "gwmv/parallel.hpp"
#include "gwmv/random.hpp"

#include <cmath>
#include <limits>

namespace gwmv {
namespace {

constexpr double kDivisionFloor = 1e-15;

std::vector<double> resolve_weights(const std::vector<double>& weights, std::size_t views) {
  if (weights.empty()) return std::vector<double>(views, 1.0 / static_cast<double>(views));
  if (weights.size() != views) throw Error(Errc::ShapeMismatch, "one weight per view is required");
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::InvalidConfig, "view weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(Errc::InvalidConfig, "view weights must sum to 1");
  return weights;
}

double mean_off_diagonal(const Matrix& d) {
  const Index n = d.rows();
  if (n < 2) return 0.0;
  return d.sum() / static_cast<double>(n * (n - 1));
}

Matrix random_symmetric_start(Index n, double target_mean, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = std::abs(normal(rng));
  }
  const double mean = mean_off_diagonal(d);
  if (mean > 0.0) d *= target_mean / mean;
  return d;
}

Matrix initial_barycenter(const MultiViewDataset& views, Index support, const BarycenterInit& init) {
  if (std::holds_alternative<FirstViewInit>(init)) {
    const Matrix& first = views.views.front().values();
    if (first.rows() != support) throw Error(Errc::ShapeMismatch, "FirstView init needs support_size == n");
    return first;
  }
  if (const auto* given = std::get_if<GivenBarycenterInit>(&init)) {
    if (given->matrix.size() != support) throw Error(Errc::ShapeMismatch, "given barycenter has the wrong size");
    return given->matrix.values();
  }
  double target = 0.0;
  for (const auto& v : views.views) target += mean_off_diagonal(v.values());
  target /= static_cast<double>(views.views.size());
  return random_symmetric_start(support, target, std::get<RandomSymmetricInit>(init).seed);
}

/// Identity correspondence when the view and the support share size and
/// weights (samples are aligned across views), otherwise the product coupling.
TransportPlan initial_plan(const DiscreteMeasure& mu, const DiscreteMeasure& p, bool aligned) {
  if (aligned && mu.size() == p.size() && (mu.weights() - p.weights()).cwiseAbs().maxCoeff() <= 1e-15) {
    return TransportPlan::diagonal(mu);
  }
  return TransportPlan::product(mu, p);
}

}  // namespace

Matrix barycenter_update(const std::vector<const Matrix*>& views, const std::vector<double>& weights,
                         const std::vector<const Matrix*>& plans, const Vector& p) {
  const Index m = p.size();
  Matrix numerator = Matrix::Zero(m, m);
  for (std::size_t s = 0; s < views.size(); ++s) {
    if (weights[s] == 0.0) continue;
    const Matrix& t = *plans[s];
    numerator.noalias() += weights[s] * (t.transpose() * (*views[s]) * t);
  }
  Matrix out(m, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < m; ++i) {
      const double denom = p(i) * p(j);
      if (denom < kDivisionFloor) {
        throw Error(Errc::DivisionGuard, "support weights p_i p_j below 1e-15 at (" + std::to_string(i) + ", " +
                                             std::to_string(j) + ")");
      }
      out(i, j) = numerator(i, j) / denom;
    }
  }
  out = 0.5 * (out + out.transpose()).eval();
  out.diagonal().setZero();
  return out;
}

namespace {

BarycenterResult single_barycenter(const MultiViewDataset& views, const DiscreteMeasure& p,
                                   const BarycenterConfig& cfg) {
  const std::size_t count = views.views.size();
  const std::vector<double> weights = resolve_weights(cfg.weights, count);
  std::vector<DiscreteMeasure> measures;
  if (cfg.view_measures.empty()) {
    for (const auto& v : views.views) measures.push_back(uniform_measure(v.size()));
  } else {
    if (cfg.view_measures.size() != count) throw Error(Errc::ShapeMismatch, "one measure per view is required");
    measures = cfg.view_measures;
  }
  for (std::size_t s = 0; s < count; ++s) {
    if (measures[s].size() != views.views[s].size()) throw Error(Errc::ShapeMismatch, "view measure size mismatch");
  }

  Matrix dbar = initial_barycenter(views, cfg.support_size, cfg.init);
  const bool aligned = !std::holds_alternative<RandomSymmetricInit>(cfg.init);
  std::vector<TransportPlan> plans;
  for (std::size_t s = 0; s < count; ++s) plans.push_back(initial_plan(measures[s], p, aligned));

  std::vector<double> trace;
  std::optional<std::pair<Matrix, std::vector<TransportPlan>>> previous;
  int iterations = 0;
  bool converged = false;
  bool rolled_back = false;

  for (int it = 0; it < cfg.outer_iters; ++it) {
    const DistanceMatrix target = DistanceMatrix::validate(dbar);
    std::vector<std::optional<GwResult>> solved(count);
    parallel_for(count, cfg.threads, [&](std::size_t s) {
      GwSolveConfig inner = cfg.inner;
      inner.init = plans[s];
      RestartOptions opts{cfg.inner_restarts, derive_seed(derive_seed(cfg.restart_seed, s), std::uint64_t(it)), 1};
      solved[s] = solve_gw_multistart(views.views[s], measures[s], target, p, inner, opts);
    });
    double objective = 0.0;
    for (std::size_t s = 0; s < count; ++s) objective += weights[s] * solved[s]->cost;

    if (!trace.empty() && objective > trace.back()) {
      dbar = std::move(previous->first);
      plans = std::move(previous->second);
      rolled_back = true;
      converged = true;
      break;
    }
    for (std::size_t s = 0; s < count; ++s) plans[s] = solved[s]->plan;
    trace.push_back(objective);
    iterations = it + 1;

    std::vector<const Matrix*> view_ptrs, plan_ptrs;
    for (std::size_t s = 0; s < count; ++s) {
      view_ptrs.push_back(&views.views[s].values());
      plan_ptrs.push_back(&plans[s].mass());
    }
    Matrix next = barycenter_update(view_ptrs, weights, plan_ptrs, p.weights());
    const double scale = std::max(dbar.norm(), std::numeric_limits<double>::min());
    const double change = (next - dbar).norm() / scale;
    previous.emplace(std::move(dbar), plans);
    dbar = std::move(next);
    if (change < cfg.tol) {
      converged = true;
      break;
    }
  }

  return BarycenterResult{DistanceMatrix::validate(std::move(dbar)), std::move(plans), std::move(trace), iterations,
                          converged, rolled_back};
}

}  // namespace

BarycenterResult gw_barycenter(const MultiViewDataset& views, const DiscreteMeasure& p, const BarycenterConfig& cfg) {
  if (views.views.empty()) throw Error(Errc::EmptyViews, "no views");
  if (cfg.support_size != p.size()) throw Error(Errc::ShapeMismatch, "support_size differs from |p|");
  if (cfg.outer_iters < 1) throw Error(Errc::InvalidConfig, "outer_iters must be >= 1");
  if (!(cfg.tol >= 0.0)) throw Error(Errc::InvalidConfig, "tol must be >= 0");
  if (cfg.restarts < 1 || cfg.inner_restarts < 1) throw Error(Errc::InvalidConfig, "restarts must be >= 1");
  cfg.inner.check();

  std::vector<std::optional<BarycenterResult>> runs(static_cast<std::size_t>(cfg.restarts));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t r) {
    BarycenterConfig local = cfg;
    if (cfg.restarts > 1) local.threads = 1;
    if (r > 0) {
      local.init = RandomSymmetricInit{derive_seed(cfg.restart_seed, static_cast<std::uint64_t>(r))};
      local.restart_seed = derive_seed(derive_seed(cfg.restart_seed, "inner"), static_cast<std::uint64_t>(r));
    }
    runs[r] = single_barycenter(views, p, local);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r]->objective() < runs[best]->objective()) best = r;
  }
  return std::move(*runs[best]);
}

double barycenter_objective(const MultiViewDataset& views, const std::vector<double>& weights,
                            const DistanceMatrix& dbar, const DiscreteMeasure& p, const GwSolveConfig& cfg) {
  if (views.views.empty()) throw Error(Errc::EmptyViews, "no views");
  if (dbar.size() != p.size()) throw Error(Errc::ShapeMismatch, "barycenter size differs from |p|");
  const std::vector<double> w = resolve_weights(weights, views.views.size());
  double total = 0.0;
  for (std::size_t s = 0; s < views.views.size(); ++s) {
    if (w[s] == 0.0) continue;
    total += w[s] * solve_gw(views.views[s], uniform_measure(views.views[s].size()), dbar, p, cfg).cost;
  }
  return total;
}

}  // namespace gwmv
