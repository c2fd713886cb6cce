#pragma once

#include "gwmv/core.hpp"

#include <vector>

namespace gwmv {

/// Pearson correlation of the strict upper triangles of a and b.
double distance_correlation(const DistanceMatrix& a, const DistanceMatrix& b);
double distance_correlation(const Matrix& a, const Matrix& b);

/// Mutual information normalized by the arithmetic mean of the two entropies.
double nmi(const std::vector<int>& truth, const std::vector<int>& pred);

/// Hubert-Arabie adjusted Rand index.
double ari(const std::vector<int>& truth, const std::vector<int>& pred);

struct ClusterEvaluation {
  double nmi = 0.0;
  double ari = 0.0;
  /// Rows follow sorted distinct true labels, columns sorted distinct predictions.
  Eigen::MatrixXi contingency;
};

ClusterEvaluation evaluate_clustering(const std::vector<int>& truth, const std::vector<int>& pred);

Eigen::MatrixXi contingency_table(const std::vector<int>& truth, const std::vector<int>& pred);

}  // namespace gwmv
