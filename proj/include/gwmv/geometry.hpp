#pragma once

#include "gwmv/core.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gwmv {

enum class DisconnectPolicy { Error, LargestComponent };

struct KnnGraphConfig {
  int k_neighbors = 10;
  /// true: keep an edge when either endpoint lists the other; false: mutual.
  bool symmetrize = true;
  DisconnectPolicy on_disconnect = DisconnectPolicy::LargestComponent;
  int threads = 1;
};

struct GeodesicResult {
  DistanceMatrix distances;
  /// Original indices of the rows of `distances` (all of 0..n-1 unless the
  /// graph was disconnected and reduced to its largest component).
  std::vector<Index> kept;
  /// Number of connected components of the k-NN graph.
  int components = 1;
};

/// Shortest-path distances on the k-NN graph of the rows of `points`.
GeodesicResult knn_geodesic(const Matrix& points, const KnnGraphConfig& cfg = {});
DistanceMatrix knn_geodesic_distances(const Matrix& points, const KnnGraphConfig& cfg = {});

enum class ManifoldKind { SwissRoll, SCurve, Moebius, GaussianBlobs };

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::SwissRoll;
  Index n = 500;
  std::uint64_t seed = 0;
  /// Standard deviation of isotropic ambient noise.
  double noise = 0.0;
  /// Blob parameters: number of centers on a square grid in the xy-plane,
  /// per-axis standard deviation and center spacing in units of sigma.
  int centers = 4;
  double sigma = 1.0;
  double separation = 10.0;

  void check() const;
};

struct ManifoldSample {
  Matrix points;
  /// Per-sample generating parameters (t, h), (t, h), (theta, w) or the
  /// center coordinates for blobs.
  Matrix latent;
  std::vector<std::string> latent_names;
  /// Blob membership; empty for continuous manifolds.
  std::vector<int> labels;
};

ManifoldSample generate_manifold(const ManifoldSpec& spec);

const char* to_string(ManifoldKind kind);
std::optional<ManifoldKind> manifold_kind_from_string(const std::string& name);

struct ViewTransform {
  enum class Kind { Rotation, LinearDeformation };
  Kind kind = Kind::Rotation;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();
  double angle = 0.0;
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();
  /// Shear of x along z: M = (I + shear * e_x e_z^T) * diag(scale).
  double shear = 0.0;

  static ViewTransform rotation(const Eigen::Vector3d& axis, double angle);
  static ViewTransform deformation(const Eigen::Vector3d& scale, double shear);

  /// 3 x 3 linear map applied to column vectors.
  Eigen::Matrix3d matrix() const;
  /// Rows of `points` mapped through matrix().
  Matrix apply(const Matrix& points) const;
};

/// Rotation about y by pi/4 and deformation scale (1.5, 1.0, 0.6) with shear 0.4.
std::vector<ViewTransform> default_transforms();

enum class ViewMetric { Geodesic, Euclidean };

struct ViewBuild {
  MultiViewDataset dataset;
  /// Original sample indices kept in every view.
  std::vector<Index> kept;
};

/// Applies each transform and builds one distance view per transform over the
/// samples that are connected in every view.
ViewBuild make_views(const Matrix& points, const std::vector<ViewTransform>& transforms,
                     const KnnGraphConfig& knn = {}, ViewMetric metric = ViewMetric::Geodesic);

/// One distance view per point cloud (rows are the same samples in every
/// cloud), each with its own k-NN settings, over the common connected samples.
ViewBuild make_views_from_clouds(const std::vector<Matrix>& clouds, const std::vector<KnnGraphConfig>& knn,
                                 ViewMetric metric = ViewMetric::Geodesic);

}  // namespace gwmv
