#include "gwmv/pipelines.hpp"

#include "gwmv/random.hpp"

namespace gwmv {

BaryGwmdsResult bary_gwmds(const MultiViewDataset& views, const BarycenterConfig& bary_cfg, const GwMdsConfig& mds_cfg,
                           const RunOptions& opts) {
  if (views.views.empty()) throw Error(Errc::EmptyViews, "no views");
  const Index n = views.sample_count();
  const DiscreteMeasure p = uniform_measure(n);
  BarycenterConfig bcfg = bary_cfg;
  bcfg.support_size = n;
  BarycenterResult bary = gw_barycenter(views, p, bcfg);

  GwMdsConfig mcfg = mds_cfg;
  mcfg.plan_solver = PlanSolver::Full;
  GwMdsResult mds = gwmds_embed_multistart(bary.barycenter, p, p, mcfg, opts.restarts,
                                           derive_seed(opts.seed, "mds"), opts.threads);

  // Sample i -> support j -> embedding point l, as a coupling of samples and
  // embedding points; each sample takes the mass-weighted mean of its points.
  const Matrix& to_support = bary.plans.front().mass();
  const Matrix chain = to_support * (p.weights().cwiseInverse().asDiagonal() * mds.plan.mass());
  const Vector mu = uniform_measure(n).weights();
  Matrix pulled = mu.cwiseInverse().asDiagonal() * (chain * mds.embedding.points());

  return BaryGwmdsResult{mds.embedding, Embedding::from_points(std::move(pulled)), std::move(bary), std::move(mds)};
}

ClusterFields extract_clusters(const TransportPlan& plan, const DiscreteMeasure& mu) {
  if (plan.rows() != mu.size()) throw Error(Errc::ShapeMismatch, "plan rows differ from |mu|");
  const Matrix& t = plan.mass();
  const Index n = t.rows(), k = t.cols();
  ClusterFields out;
  out.hard_labels.resize(static_cast<std::size_t>(n));
  out.soft_assignments.resize(n, k);
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    for (Index j = 1; j < k; ++j) {
      if (t(i, j) > t(i, best)) best = j;
    }
    out.hard_labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    if (mu[i] > 0.0) {
      out.soft_assignments.row(i) = t.row(i) / mu[i];
    } else {
      out.soft_assignments.row(i).setConstant(1.0 / static_cast<double>(k));
    }
  }
  out.cluster_mass = t.colwise().sum().transpose();
  return out;
}

DistanceMatrix mean_view(const MultiViewDataset& views, bool normalize_views) {
  if (views.views.empty()) throw Error(Errc::EmptyViews, "no views");
  const Index n = views.sample_count();
  Matrix sum = Matrix::Zero(n, n);
  for (const auto& v : views.views) {
    double factor = 1.0;
    if (normalize_views && n > 1) {
      const double mean = v.values().sum() / static_cast<double>(n * (n - 1));
      if (mean > 0.0) factor = 1.0 / mean;
    }
    sum += factor * v.values();
  }
  return DistanceMatrix::validate(sum / static_cast<double>(views.views.size()));
}

ClusteringResult mean_gwmds_c(const MultiViewDataset& views, Index k, const GwMdsConfig& mds_cfg,
                              const RunOptions& opts, bool normalize_views) {
  if (views.views.empty()) throw Error(Errc::EmptyViews, "no views");
  const Index n = views.sample_count();
  if (k < 1) throw Error(Errc::InvalidConfig, "k must be >= 1");
  if (k > n) {
    throw Error(Errc::PrototypeCountExceedsSamples,
                "k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " samples");
  }
  const DistanceMatrix dbar = mean_view(views, normalize_views);
  const DiscreteMeasure mu = uniform_measure(n);
  GwMdsConfig cfg = mds_cfg;
  cfg.plan_solver = PlanSolver::SemiRelaxed;
  GwMdsResult mds =
      gwmds_embed_multistart(dbar, mu, uniform_measure(k), cfg, opts.restarts, derive_seed(opts.seed, "mds"),
                             opts.threads);
  ClusterFields fields = extract_clusters(mds.plan, mu);
  const double cost = mds.cost;
  return ClusteringResult{std::move(mds.embedding),           std::move(mds.plan),
                          std::move(fields.hard_labels),      std::move(fields.soft_assignments),
                          std::move(fields.cluster_mass),     cost};
}

}  // namespace gwmv
