#include "gwmv/core.hpp"

#include <cmath>
#include <sstream>

namespace gwmv {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::NonSquare: return "NonSquare";
    case Errc::NegativeEntry: return "NegativeEntry";
    case Errc::NonzeroDiagonal: return "NonzeroDiagonal";
    case Errc::AsymmetryTooLarge: return "AsymmetryTooLarge";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::ZeroSize: return "ZeroSize";
    case Errc::InvalidMeasure: return "InvalidMeasure";
    case Errc::InvalidPlan: return "InvalidPlan";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::LinearOtFailure: return "LinearOtFailure";
    case Errc::EmptyViews: return "EmptyViews";
    case Errc::DivisionGuard: return "DivisionGuard";
    case Errc::PrototypeCountExceedsSamples: return "PrototypeCountExceedsSamples";
    case Errc::GraphDisconnected: return "GraphDisconnected";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidSweepParameter: return "InvalidSweepParameter";
    case Errc::NotConverged: return "NotConverged";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::string shape_of(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

DistanceMatrix DistanceMatrix::validate(Matrix values) {
  if (values.rows() != values.cols()) {
    throw Error(Errc::NonSquare, "distance matrix is " + shape_of(values));
  }
  if (values.rows() == 0) throw Error(Errc::ZeroSize, "distance matrix is empty");
  if (!all_finite(values)) throw Error(Errc::NonFiniteInput, "distance matrix has non-finite entries");
  if ((values.array() < 0.0).any()) {
    throw Error(Errc::NegativeEntry, "distance matrix has negative entries");
  }
  const double diag = values.diagonal().cwiseAbs().maxCoeff();
  if (diag > kDiagonalTolerance) {
    throw Error(Errc::NonzeroDiagonal, "diagonal magnitude " + std::to_string(diag));
  }
  const double asym = (values - values.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw Error(Errc::AsymmetryTooLarge, "asymmetry " + std::to_string(asym));
  }
  if (asym > 0.0) {
    Matrix sym = 0.5 * (values + values.transpose());
    values = std::move(sym);
  }
  values.diagonal().setZero();
  return DistanceMatrix(std::move(values));
}

DistanceMatrix DistanceMatrix::scaled(double factor) const {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw Error(Errc::InvalidConfig, "scale factor must be finite and nonnegative");
  }
  return DistanceMatrix(values_ * factor);
}

DistanceMatrix DistanceMatrix::subset(const std::vector<Index>& indices) const {
  const auto k = static_cast<Index>(indices.size());
  Matrix out(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) out(a, b) = values_(indices[a], indices[b]);
  }
  return DistanceMatrix(std::move(out));
}

DiscreteMeasure DiscreteMeasure::uniform(Index n) {
  if (n < 1) throw Error(Errc::ZeroSize, "measure needs at least one atom");
  return DiscreteMeasure(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure DiscreteMeasure::from_weights(Vector weights) {
  if (weights.size() == 0) throw Error(Errc::ZeroSize, "measure needs at least one atom");
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw Error(Errc::InvalidMeasure, "weights must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > kMassTolerance) {
    throw Error(Errc::InvalidMeasure, "weights sum to " + std::to_string(weights.sum()));
  }
  return DiscreteMeasure(std::move(weights));
}

double marginal_error(const Matrix& plan, const Vector& mu, const Vector* nu) {
  double err = (plan.rowwise().sum() - mu).cwiseAbs().maxCoeff();
  if (nu != nullptr) {
    err = std::max(err, (plan.colwise().sum().transpose() - *nu).cwiseAbs().maxCoeff());
  }
  return err;
}

namespace {

void check_plan_entries(const Matrix& mass) {
  if (!mass.allFinite() || (mass.array() < 0.0).any()) {
    throw Error(Errc::InvalidPlan, "plan entries must be finite and nonnegative");
  }
  if (std::abs(mass.sum() - 1.0) > TransportPlan::kMarginalTolerance) {
    throw Error(Errc::InvalidPlan, "plan total mass " + std::to_string(mass.sum()));
  }
}

}  // namespace

TransportPlan TransportPlan::full(Matrix mass, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mass.rows() != mu.size() || mass.cols() != nu.size()) {
    throw Error(Errc::ShapeMismatch, "plan " + shape_of(mass) + " vs measures " +
                                         std::to_string(mu.size()) + "," + std::to_string(nu.size()));
  }
  check_plan_entries(mass);
  if (marginal_error(mass, mu.weights(), &nu.weights()) > kMarginalTolerance) {
    throw Error(Errc::InvalidPlan, "plan marginals do not match");
  }
  return TransportPlan(std::move(mass), Kind::Full);
}

TransportPlan TransportPlan::semi_relaxed(Matrix mass, const DiscreteMeasure& mu) {
  if (mass.rows() != mu.size() || mass.cols() == 0) {
    throw Error(Errc::ShapeMismatch, "plan " + shape_of(mass) + " vs measure " + std::to_string(mu.size()));
  }
  check_plan_entries(mass);
  if (marginal_error(mass, mu.weights()) > kMarginalTolerance) {
    throw Error(Errc::InvalidPlan, "plan row marginal does not match");
  }
  return TransportPlan(std::move(mass), Kind::SemiRelaxed);
}

TransportPlan TransportPlan::product(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return TransportPlan(mu.weights() * nu.weights().transpose(), Kind::Full);
}

TransportPlan TransportPlan::diagonal(const DiscreteMeasure& mu) {
  return TransportPlan(Matrix(mu.weights().asDiagonal()), Kind::Full);
}

Embedding Embedding::from_points(Matrix points) {
  if (points.rows() == 0 || points.cols() == 0) throw Error(Errc::ZeroSize, "embedding is empty");
  if (!points.allFinite()) throw Error(Errc::NonFiniteInput, "embedding has non-finite coordinates");
  return Embedding(std::move(points));
}

MultiViewDataset MultiViewDataset::make(std::vector<DistanceMatrix> views,
                                        std::optional<std::vector<int>> labels) {
  if (views.empty()) throw Error(Errc::EmptyViews, "dataset needs at least one view");
  const Index n = views.front().size();
  for (const auto& v : views) {
    if (v.size() != n) throw Error(Errc::ShapeMismatch, "views have different sample counts");
  }
  if (labels && static_cast<Index>(labels->size()) != n) {
    throw Error(Errc::LengthMismatch, "labels length differs from sample count");
  }
  return MultiViewDataset{std::move(views), std::move(labels)};
}

Matrix pairwise_distances(const Matrix& points, double eps) {
  const Index n = points.rows();
  Matrix out(n, n);
  for (Index j = 0; j < n; ++j) {
    out(j, j) = 0.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = std::sqrt((points.row(i) - points.row(j)).squaredNorm() + eps);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

DistanceMatrix euclidean_distances(const Matrix& points) {
  if (!points.allFinite()) throw Error(Errc::NonFiniteInput, "points have non-finite coordinates");
  if (points.rows() == 0) throw Error(Errc::ZeroSize, "no points");
  return DistanceMatrix::validate(pairwise_distances(points));
}

DiscreteMeasure uniform_measure(Index n) { return DiscreteMeasure::uniform(n); }

}  // namespace gwmv
