#include "gwmv/gw.hpp"

#include "gwmv/linear_ot.hpp"
#include "gwmv/parallel.hpp"
#include "gwmv/random.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace gwmv {
namespace {

std::mutex g_audit_mutex;
SolverAudit g_audit;

void record_audit(long iterations, double marginal, double increase) {
  std::lock_guard lock(g_audit_mutex);
  g_audit.runs += 1;
  g_audit.iterations += iterations;
  g_audit.max_marginal_error = std::max(g_audit.max_marginal_error, marginal);
  g_audit.max_trace_increase = std::max(g_audit.max_trace_increase, increase);
}

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw Error(Errc::ShapeMismatch, std::string(what) + " is not square");
}

void check_shapes(const Matrix& dx, const Matrix& dy, const Matrix& plan) {
  check_square(dx, "Dx");
  check_square(dy, "Dy");
  if (plan.rows() != dx.rows() || plan.cols() != dy.rows()) {
    throw Error(Errc::ShapeMismatch, "plan is " + std::to_string(plan.rows()) + "x" +
                                         std::to_string(plan.cols()) + ", spaces have " +
                                         std::to_string(dx.rows()) + " and " + std::to_string(dy.rows()) +
                                         " points");
  }
}

Eigen::SparseMatrix<double> sparse_of(const Matrix& x) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(x.rows() + x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      if (x(i, j) != 0.0) entries.emplace_back(i, j, x(i, j));
    }
  }
  Eigen::SparseMatrix<double> s(x.rows(), x.cols());
  s.setFromTriplets(entries.begin(), entries.end());
  return s;
}

/// Quadratic objective evaluated from a cached cross term Dx T Dy^T.
double objective_from_cross(const Matrix& dx2, const Matrix& dy2, const Matrix& plan, const Matrix& cross) {
  const Vector rows = plan.rowwise().sum();
  const Vector cols = plan.colwise().sum().transpose();
  return rows.dot(dx2 * rows) + cols.dot(dy2 * cols) - 2.0 * cross.cwiseProduct(plan).sum();
}

Matrix gradient_from_cross(const Matrix& dx2, const Matrix& dy2, const Matrix& plan, const Matrix& cross) {
  const Vector rows = plan.rowwise().sum();
  const Vector cols = plan.colwise().sum().transpose();
  const Vector cr = dx2 * rows;
  const Vector cc = dy2 * cols;
  Matrix g = -4.0 * cross;
  g.colwise() += 2.0 * cr;
  g.rowwise() += 2.0 * cc.transpose();
  return g;
}

enum class Polytope { Full, SemiRelaxed };

Matrix row_argmin_direction(const Matrix& grad, const Vector& mu) {
  Matrix x = Matrix::Zero(grad.rows(), grad.cols());
  for (Index i = 0; i < grad.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < grad.cols(); ++j) {
      if (grad(i, j) < grad(i, best)) best = j;
    }
    x(i, best) = mu(i);
  }
  return x;
}

/// Exact minimiser over [0, 1] of a*g^2 + b*g. For a <= 0 the minimum sits
/// at an endpoint, which also moves off saddles where b == 0.
double exact_step(double a, double b) {
  if (a > 0.0) return std::clamp(-b / (2.0 * a), 0.0, 1.0);
  return a + b < 0.0 ? 1.0 : 0.0;
}

GwResult conditional_gradient(const Matrix& dx, const DiscreteMeasure& mu, const Matrix& dy,
                              const DiscreteMeasure* nu, Matrix plan, const GwSolveConfig& cfg) {
  const Polytope polytope = nu != nullptr ? Polytope::Full : Polytope::SemiRelaxed;
  const Matrix dx2 = dx.cwiseAbs2();
  const Matrix dy2 = dy.cwiseAbs2();
  Matrix cross = dx * plan * dy.transpose();
  double f = objective_from_cross(dx2, dy2, plan, cross);
  const double abs_floor = 1e-15 * (dx2.maxCoeff() + dy2.maxCoeff());

  std::vector<double> trace{f};
  int iterations = 0;
  bool converged = false;
  double max_marginal = marginal_error(plan, mu.weights(), nu != nullptr ? &nu->weights() : nullptr);
  double max_increase = 0.0;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const Matrix grad = gradient_from_cross(dx2, dy2, plan, cross);
    const Matrix vertex = polytope == Polytope::Full
                              ? solve_linear_ot(mu.weights(), nu->weights(), grad).plan
                              : row_argmin_direction(grad, mu.weights());
    const Matrix delta = vertex - plan;
    const double b = grad.cwiseProduct(delta).sum();
    const Matrix cross_vertex = (dx * sparse_of(vertex)) * dy.transpose();
    const Matrix cross_delta = cross_vertex - cross;
    const Vector drows = delta.rowwise().sum();
    const Vector dcols = delta.colwise().sum().transpose();
    const double a = drows.dot(dx2 * drows) + dcols.dot(dy2 * dcols) - 2.0 * cross_delta.cwiseProduct(delta).sum();
    const double gamma = exact_step(a, b);
    if (gamma <= 0.0) {
      converged = true;
      break;
    }

    Matrix next = plan + gamma * delta;
    Matrix next_cross = cross + gamma * cross_delta;
    const double f_next = objective_from_cross(dx2, dy2, next, next_cross);
    if (f_next > f) {
      // Rounding-level ascent: the segment minimum is numerically flat.
      converged = true;
      break;
    }
    plan = std::move(next);
    cross = std::move(next_cross);
    iterations = it + 1;
    max_marginal =
        std::max(max_marginal, marginal_error(plan, mu.weights(), nu != nullptr ? &nu->weights() : nullptr));
    max_increase = std::max(max_increase, f_next - trace.back());
    trace.push_back(f_next);

    const double change = f - f_next;
    f = f_next;
    if (change <= cfg.tol * std::abs(f + change) + abs_floor) {
      converged = true;
      break;
    }
  }

  const double cost = std::max(0.0, gw_cost(dx, dy, plan));
  record_audit(iterations, max_marginal, max_increase);
  return GwResult{polytope == Polytope::Full ? TransportPlan::full(std::move(plan), mu, *nu)
                                             : TransportPlan::semi_relaxed(std::move(plan), mu),
                  cost, iterations, converged, std::move(trace)};
}

Matrix starting_plan(const GwSolveConfig& cfg, const DiscreteMeasure& mu, const DiscreteMeasure* nu, Index cols) {
  if (!cfg.init) {
    if (nu != nullptr) return TransportPlan::product(mu, *nu).mass();
    return mu.weights() * Vector::Constant(cols, 1.0 / static_cast<double>(cols)).transpose();
  }
  const Matrix& init = cfg.init->mass();
  if (init.rows() != mu.size() || init.cols() != cols) {
    throw Error(Errc::ShapeMismatch, "initial plan shape does not match the problem");
  }
  if (marginal_error(init, mu.weights(), nu != nullptr ? &nu->weights() : nullptr) >
      TransportPlan::kMarginalTolerance) {
    throw Error(Errc::InvalidPlan, "initial plan is not feasible for the given measures");
  }
  return init;
}

}  // namespace

void GwSolveConfig::check() const {
  if (max_iters < 1) throw Error(Errc::InvalidConfig, "max_iters must be >= 1");
  if (!(tol >= 0.0)) throw Error(Errc::InvalidConfig, "tol must be >= 0");
}

double gw_cost(const Matrix& dx, const Matrix& dy, const Matrix& plan) {
  check_shapes(dx, dy, plan);
  const Matrix cross = dx * plan * dy.transpose();
  return objective_from_cross(dx.cwiseAbs2(), dy.cwiseAbs2(), plan, cross);
}

double gw_cost(const DistanceMatrix& dx, const DistanceMatrix& dy, const TransportPlan& plan) {
  return gw_cost(dx.values(), dy.values(), plan.mass());
}

Matrix gw_gradient_wrt_plan(const Matrix& dx, const Matrix& dy, const Matrix& plan) {
  check_shapes(dx, dy, plan);
  const Matrix cross = dx * plan * dy.transpose();
  return gradient_from_cross(dx.cwiseAbs2(), dy.cwiseAbs2(), plan, cross);
}

Matrix gw_gradient_wrt_plan(const DistanceMatrix& dx, const DistanceMatrix& dy, const TransportPlan& plan) {
  return gw_gradient_wrt_plan(dx.values(), dy.values(), plan.mass());
}

GwResult solve_gw(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                  const DiscreteMeasure& nu, const GwSolveConfig& cfg) {
  cfg.check();
  if (dx.size() != mu.size() || dy.size() != nu.size()) {
    throw Error(Errc::ShapeMismatch, "measure sizes do not match the distance matrices");
  }
  return conditional_gradient(dx.values(), mu, dy.values(), &nu, starting_plan(cfg, mu, &nu, dy.size()), cfg);
}

GwResult solve_srgw(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                    const GwSolveConfig& cfg) {
  cfg.check();
  if (dx.size() != mu.size()) throw Error(Errc::ShapeMismatch, "measure size does not match Dx");
  return conditional_gradient(dx.values(), mu, dy.values(), nullptr, starting_plan(cfg, mu, nullptr, dy.size()),
                              cfg);
}

TransportPlan random_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Matrix k(mu.size(), nu.size());
  for (Index j = 0; j < k.cols(); ++j) {
    for (Index i = 0; i < k.rows(); ++i) k(i, j) = unif(rng);
  }
  const Vector& a = mu.weights();
  const Vector& b = nu.weights();
  for (int it = 0; it < 10000; ++it) {
    const Vector rs = k.rowwise().sum();
    for (Index i = 0; i < k.rows(); ++i) k.row(i) *= rs(i) > 0.0 ? a(i) / rs(i) : 0.0;
    const Vector cs = k.colwise().sum().transpose();
    for (Index j = 0; j < k.cols(); ++j) k.col(j) *= cs(j) > 0.0 ? b(j) / cs(j) : 0.0;
    if (marginal_error(k, a, &b) <= 1e-13) break;
  }
  return TransportPlan::full(std::move(k), mu, nu);
}

TransportPlan random_semi_relaxed_plan(const DiscreteMeasure& mu, Index cols, std::uint64_t seed) {
  if (cols < 1) throw Error(Errc::ZeroSize, "plan needs at least one column");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Matrix k(mu.size(), cols);
  for (Index i = 0; i < k.rows(); ++i) {
    for (Index j = 0; j < cols; ++j) k(i, j) = unif(rng);
    k.row(i) *= mu[i] / k.row(i).sum();
  }
  return TransportPlan::semi_relaxed(std::move(k), mu);
}

namespace {

template <class Solve, class RandomInit>
GwResult best_of(const GwSolveConfig& cfg, const RestartOptions& opts, Solve&& solve, RandomInit&& random_init) {
  if (opts.restarts < 1) throw Error(Errc::InvalidConfig, "restarts must be >= 1");
  std::vector<std::optional<GwResult>> runs(static_cast<std::size_t>(opts.restarts));
  parallel_for(runs.size(), opts.threads, [&](std::size_t r) {
    GwSolveConfig local = cfg;
    if (r > 0) local.init = random_init(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
    runs[r] = solve(local);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r]->cost < runs[best]->cost) best = r;
  }
  return std::move(*runs[best]);
}

}  // namespace

GwResult solve_gw_multistart(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                             const DiscreteMeasure& nu, const GwSolveConfig& cfg, const RestartOptions& opts) {
  return best_of(
      cfg, opts, [&](const GwSolveConfig& c) { return solve_gw(dx, mu, dy, nu, c); },
      [&](std::uint64_t s) { return random_coupling(mu, nu, s); });
}

GwResult solve_srgw_multistart(const DistanceMatrix& dx, const DiscreteMeasure& mu, const DistanceMatrix& dy,
                               const GwSolveConfig& cfg, const RestartOptions& opts) {
  return best_of(
      cfg, opts, [&](const GwSolveConfig& c) { return solve_srgw(dx, mu, dy, c); },
      [&](std::uint64_t s) { return random_semi_relaxed_plan(mu, dy.size(), s); });
}

SolverAudit solver_audit() {
  std::lock_guard lock(g_audit_mutex);
  return g_audit;
}

void reset_solver_audit() {
  std::lock_guard lock(g_audit_mutex);
  g_audit = SolverAudit{};
}

}  // namespace gwmv
