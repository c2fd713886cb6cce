#include "gwmv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gwmv {
namespace {

void check_labels(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size()) {
    throw Error(Errc::LengthMismatch, "label vectors have lengths " + std::to_string(truth.size()) + " and " +
                                          std::to_string(pred.size()));
  }
  if (truth.empty()) throw Error(Errc::Empty, "label vectors are empty");
}

std::map<int, Index> dense_codes(const std::vector<int>& labels) {
  std::map<int, Index> codes;
  for (const int l : labels) codes.emplace(l, 0);
  Index next = 0;
  for (auto& [label, code] : codes) code = next++;
  return codes;
}

/// One nonzero per row and per column: the partitions agree up to names.
bool same_partition(const Eigen::MatrixXi& table) {
  for (Index i = 0; i < table.rows(); ++i) {
    if ((table.row(i).array() > 0).count() != 1) return false;
  }
  for (Index j = 0; j < table.cols(); ++j) {
    if ((table.col(j).array() > 0).count() != 1) return false;
  }
  return true;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

double distance_correlation(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw Error(Errc::ShapeMismatch, "distance matrices must be square and of equal size");
  }
  const Index n = a.rows();
  const double count = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  if (count < 1.0) throw Error(Errc::ZeroVariance, "fewer than two samples");
  double ma = 0.0, mb = 0.0;
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      ma += a(i, j);
      mb += b(i, j);
    }
  }
  ma /= count;
  mb /= count;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double da = a(i, j) - ma, db = b(i, j) - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(Errc::ZeroVariance, "constant off-diagonal distances");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double distance_correlation(const DistanceMatrix& a, const DistanceMatrix& b) {
  return distance_correlation(a.values(), b.values());
}

Eigen::MatrixXi contingency_table(const std::vector<int>& truth, const std::vector<int>& pred) {
  check_labels(truth, pred);
  const auto rows = dense_codes(truth);
  const auto cols = dense_codes(pred);
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t s = 0; s < truth.size(); ++s) ++table(rows.at(truth[s]), cols.at(pred[s]));
  return table;
}

double nmi(const std::vector<int>& truth, const std::vector<int>& pred) {
  const Eigen::MatrixXi table = contingency_table(truth, pred);
  const double n = static_cast<double>(truth.size());
  const Eigen::VectorXd a = table.cast<double>().rowwise().sum();
  const Eigen::VectorXd b = table.cast<double>().colwise().sum().transpose();
  auto entropy = [n](const Eigen::VectorXd& counts) {
    double h = 0.0;
    for (Index i = 0; i < counts.size(); ++i) {
      if (counts(i) > 0.0) h -= (counts(i) / n) * std::log(counts(i) / n);
    }
    return h;
  };
  const double ha = entropy(a), hb = entropy(b);
  if (table.rows() == 1 && table.cols() == 1) return 1.0;
  const double mean = 0.5 * (ha + hb);
  if (mean <= 0.0) return same_partition(table) ? 1.0 : 0.0;
  double mi = 0.0;
  for (Index i = 0; i < table.rows(); ++i) {
    for (Index j = 0; j < table.cols(); ++j) {
      const double c = table(i, j);
      if (c > 0.0) mi += (c / n) * std::log(c * n / (a(i) * b(j)));
    }
  }
  return std::clamp(mi / mean, 0.0, 1.0);
}

double ari(const std::vector<int>& truth, const std::vector<int>& pred) {
  const Eigen::MatrixXi table = contingency_table(truth, pred);
  const double n = static_cast<double>(truth.size());
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (Index i = 0; i < table.rows(); ++i) {
    for (Index j = 0; j < table.cols(); ++j) index += choose2(table(i, j));
  }
  for (Index i = 0; i < table.rows(); ++i) sum_a += choose2(table.row(i).sum());
  for (Index j = 0; j < table.cols(); ++j) sum_b += choose2(table.col(j).sum());
  if (choose2(n) == 0.0) return same_partition(table) ? 1.0 : 0.0;
  const double expected = sum_a * sum_b / choose2(n);
  const double denom = 0.5 * (sum_a + sum_b) - expected;
  if (denom == 0.0) return same_partition(table) ? 1.0 : 0.0;
  return (index - expected) / denom;
}

ClusterEvaluation evaluate_clustering(const std::vector<int>& truth, const std::vector<int>& pred) {
  return ClusterEvaluation{nmi(truth, pred), ari(truth, pred), contingency_table(truth, pred)};
}

}  // namespace gwmv
