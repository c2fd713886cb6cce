#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwmv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Errc {
  NonSquare,
  NegativeEntry,
  NonzeroDiagonal,
  AsymmetryTooLarge,
  NonFiniteInput,
  ZeroSize,
  InvalidMeasure,
  InvalidPlan,
  ShapeMismatch,
  LinearOtFailure,
  EmptyViews,
  DivisionGuard,
  PrototypeCountExceedsSamples,
  GraphDisconnected,
  KTooLarge,
  InvalidConfig,
  ZeroVariance,
  LengthMismatch,
  Empty,
  IoError,
  ParseError,
  InvalidSweepParameter,
  NotConverged,
};

const char* to_string(Errc code);

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Symmetric, nonnegative, zero-diagonal n x n matrix of pairwise distances.
class DistanceMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-9;
  static constexpr double kDiagonalTolerance = 1e-9;

  /// Checks shape, finiteness, sign and diagonal, then repairs asymmetry up to
  /// kSymmetryTolerance by averaging with the transpose.
  static DistanceMatrix validate(Matrix values);

  Index size() const noexcept { return values_.rows(); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(Index i, Index j) const { return values_(i, j); }

  DistanceMatrix scaled(double factor) const;
  /// Restriction to the given sample indices, in the given order.
  DistanceMatrix subset(const std::vector<Index>& indices) const;

 private:
  explicit DistanceMatrix(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

/// Nonnegative weights summing to one.
class DiscreteMeasure {
 public:
  static constexpr double kMassTolerance = 1e-9;

  static DiscreteMeasure uniform(Index n);
  static DiscreteMeasure from_weights(Vector weights);

  Index size() const noexcept { return weights_.size(); }
  const Vector& weights() const noexcept { return weights_; }
  double operator[](Index i) const { return weights_(i); }

 private:
  explicit DiscreteMeasure(Vector weights) : weights_(std::move(weights)) {}
  Vector weights_;
};

/// Nonnegative coupling with checked marginals.
class TransportPlan {
 public:
  enum class Kind { Full, SemiRelaxed };
  static constexpr double kMarginalTolerance = 1e-9;

  static TransportPlan full(Matrix mass, const DiscreteMeasure& mu, const DiscreteMeasure& nu);
  static TransportPlan semi_relaxed(Matrix mass, const DiscreteMeasure& mu);
  /// mu nu^T
  static TransportPlan product(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
  /// diag(mu); requires |mu| == |nu| and matching weights.
  static TransportPlan diagonal(const DiscreteMeasure& mu);

  Index rows() const noexcept { return mass_.rows(); }
  Index cols() const noexcept { return mass_.cols(); }
  const Matrix& mass() const noexcept { return mass_; }
  Kind kind() const noexcept { return kind_; }

  Vector row_sums() const { return mass_.rowwise().sum(); }
  Vector col_sums() const { return mass_.colwise().sum().transpose(); }

 private:
  TransportPlan(Matrix mass, Kind kind) : mass_(std::move(mass)), kind_(kind) {}
  Matrix mass_;
  Kind kind_;
};

/// n x d coordinates, all finite.
class Embedding {
 public:
  static Embedding from_points(Matrix points);

  Index size() const noexcept { return points_.rows(); }
  Index dim() const noexcept { return points_.cols(); }
  const Matrix& points() const noexcept { return points_; }

 private:
  explicit Embedding(Matrix points) : points_(std::move(points)) {}
  Matrix points_;
};

/// S >= 1 distance views over a common sample set.
struct MultiViewDataset {
  std::vector<DistanceMatrix> views;
  std::optional<std::vector<int>> labels;

  static MultiViewDataset make(std::vector<DistanceMatrix> views,
                               std::optional<std::vector<int>> labels = std::nullopt);

  Index sample_count() const { return views.front().size(); }
  Index view_count() const { return static_cast<Index>(views.size()); }
};

/// Pairwise Euclidean distances between the rows of `points`, without
/// validation. With eps > 0 the off-diagonal entries are sqrt(|.|^2 + eps).
Matrix pairwise_distances(const Matrix& points, double eps = 0.0);

DistanceMatrix euclidean_distances(const Matrix& points);

DiscreteMeasure uniform_measure(Index n);

/// Largest absolute deviation of the plan's row sums (and column sums when
/// `nu` is given) from the target weights.
double marginal_error(const Matrix& plan, const Vector& mu, const Vector* nu = nullptr);

}  // namespace gwmv
