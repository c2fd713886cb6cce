#pragma once

#include "gwmv/barycenter.hpp"
#include "gwmv/embedding.hpp"
#include "gwmv/geometry.hpp"
#include "gwmv/gw.hpp"
#include "gwmv/io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gwmv {

enum class EmbedMethod { BaryGwmds, BaselineAvgMds };

/// How a dataset directory is read.
///   distances:   view_1.csv ... view_S.csv hold n x n distance matrices.
///   coordinates: view_1.csv ... view_S.csv hold per-view coordinates, turned
///                into distances with `metric` (geodesic uses the k-NN
///                settings, with per-view k when `k_neighbors` is given).
///   mfeat:       the UCI Multiple Features files mfeat-fou, mfeat-fac,
///                mfeat-kar, mfeat-pix, mfeat-zer, mfeat-mor (whitespace
///                separated, 200 consecutive samples per digit class).
/// Labels come from labels.csv when present, else from a `# labels` column of
/// the first coordinate file.
struct DatasetSource {
  std::filesystem::path dir;
  std::string format = "distances";
  /// Geodesic conversion of ingested coordinates is opt-in.
  ViewMetric metric = ViewMetric::Euclidean;
  std::vector<int> k_neighbors;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int restarts = 3;
  int threads = 1;
  bool strict = false;
  std::filesystem::path output_dir = "out";

  ManifoldSpec manifold;
  std::vector<ViewTransform> transforms = default_transforms();
  KnnGraphConfig knn;
  ViewMetric view_metric = ViewMetric::Geodesic;

  DatasetSource dataset;
  EmbedMethod method = EmbedMethod::BaryGwmds;
  Index k = 4;
  bool normalize_views = false;

  GwSolveConfig gw;
  BarycenterConfig barycenter;
  GwMdsConfig mds;
  bool barycenter_first_view = false;

  std::string sweep_command = "cluster";
  std::string sweep_parameter;
  std::vector<Json> sweep_values;
};

/// Parses a config tree; missing keys keep their defaults. Throws
/// Error(InvalidConfig) on unknown keys or ill-typed values.
ExperimentConfig config_from_json(const Json& j);
/// Complete config tree; config_from_json(config_to_json(c)) reproduces c.
Json config_to_json(const ExperimentConfig& cfg);

/// Views and optional labels read from cfg.dataset.
MultiViewDataset load_dataset(const ExperimentConfig& cfg);

/// Per-view distance correlation of the sample embedding with each view plus
/// their mean, keyed view_1 ... view_S, mean.
Json correlation_metrics(const Matrix& sample_points, const MultiViewDataset& views);

/// Each command writes its files and manifest.json into cfg.output_dir and
/// returns the metrics it wrote.
Json cmd_generate(const ExperimentConfig& cfg);
Json cmd_embed(const ExperimentConfig& cfg);
Json cmd_cluster(const ExperimentConfig& cfg);
Json cmd_sweep(const ExperimentConfig& cfg);

/// Process exit status for an error: 2 config, 3 data, 4 numerical.
int exit_code_for(Errc code);

}  // namespace gwmv
