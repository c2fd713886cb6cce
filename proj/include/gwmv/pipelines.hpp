#pragma once

#include "gwmv/barycenter.hpp"
#include "gwmv/core.hpp"
#include "gwmv/embedding.hpp"

#include <cstdint>
#include <vector>

namespace gwmv {

struct RunOptions {
  int restarts = 3;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BaryGwmdsResult {
  /// Coordinates of the barycenter support points.
  Embedding embedding;
  /// One coordinate row per sample: the embedding pulled back through the
  /// first view's barycenter plan and the embedding plan.
  Embedding sample_embedding;
  BarycenterResult barycenter;
  GwMdsResult mds;
};

/// Barycenter of the views on n support points, then GW-MDS of the
/// barycenter with full couplings.
BaryGwmdsResult bary_gwmds(const MultiViewDataset& views, const BarycenterConfig& bary_cfg, const GwMdsConfig& mds_cfg,
                           const RunOptions& opts = {});

struct ClusteringResult {
  Embedding prototypes;
  TransportPlan plan;
  std::vector<int> hard_labels;
  Matrix soft_assignments;
  Vector cluster_mass;
  double cost = 0.0;
};

struct ClusterFields {
  std::vector<int> hard_labels;
  Matrix soft_assignments;
  Vector cluster_mass;
};

/// Argmax labels (lowest index on ties), row-normalized plan and column mass.
ClusterFields extract_clusters(const TransportPlan& plan, const DiscreteMeasure& mu);

/// Element-wise mean of the views, optionally after dividing each view by its
/// mean off-diagonal distance.
DistanceMatrix mean_view(const MultiViewDataset& views, bool normalize_views = false);

/// Mean view embedded onto k prototypes with semi-relaxed plans; clusters are
/// read off the final plan.
ClusteringResult mean_gwmds_c(const MultiViewDataset& views, Index k, const GwMdsConfig& mds_cfg,
                              const RunOptions& opts = {}, bool normalize_views = false);

}  // namespace gwmv
