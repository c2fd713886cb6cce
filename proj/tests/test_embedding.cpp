#include "gwmv/embedding.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace gwmv;

namespace {

Matrix gaussian(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix y(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) y(i, c) = g(rng);
  return y;
}

Matrix path3() {
  Matrix m(3, 3);
  m << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  return m;
}

double upper_pearson(const Matrix& a, const Matrix& b) {
  std::vector<double> x, y;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = i + 1; j < a.cols(); ++j) {
      x.push_back(a(i, j));
      y.push_back(b(i, j));
    }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) mx += x[k] / n, my += y[k] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

void expect_monotone(const std::vector<double>& trace) {
  for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_LE(trace[t], trace[t - 1] + 1e-9);
}

}  // namespace

TEST(EmbeddingObjective, MatchesNaiveSum) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6, m = 2 + trial % 5, dim = 1 + trial % 3;
    const Matrix d = oracle::random_symmetric(n, rng, 0.0, 2.0);
    const Matrix y = gaussian(m, dim, rng);
    const Matrix t = oracle::random_plan_like(n, m, rng);
    const double naive = oracle::naive_embedding_objective(d, y, t, 1e-12);
    EXPECT_NEAR(gw_embedding_objective(d, y, t, 1e-12), naive, 1e-10 * std::max(1.0, naive));
  }
}

TEST(EmbeddingGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 7, m = 2 + (trial * 3) % 7, dim = 1 + trial % 3;
    const Matrix d = oracle::random_symmetric(n, rng, 0.0, 2.0);
    const Matrix y = gaussian(m, dim, rng);
    const Matrix t = oracle::random_plan_like(n, m, rng);
    const Matrix fd = oracle::central_difference(
        [&](const Matrix& p) { return oracle::naive_embedding_objective(d, p, t, 1e-12); }, y, 1e-6);
    const Matrix g = gw_embedding_gradient(d, y, t, 1e-12);
    EXPECT_LE((g - fd).norm(), 1e-4 * fd.norm()) << "trial " << trial;
  }
}

TEST(EmbeddingGradient, VanishesAtZeroLoss) {
  std::mt19937_64 rng(33);
  const Matrix y = gaussian(6, 2, rng);
  const Matrix d = pairwise_distances(y);
  const Matrix t = Matrix(Vector::Constant(6, 1.0 / 6).asDiagonal());
  EXPECT_LE(gw_embedding_gradient(d, y, t, 1e-12).norm(), 1e-8);
}

TEST(EmbeddingGradient, ColumnsSumToZero) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix d = oracle::random_symmetric(5, rng, 0.0, 3.0);
    const Matrix y = gaussian(4, 3, rng);
    const Matrix g = gw_embedding_gradient(d, y, oracle::random_plan_like(5, 4, rng), 1e-12);
    EXPECT_LE(g.colwise().sum().cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EmbeddingObjective, TranslationAndRotationInvariant) {
  std::mt19937_64 rng(35);
  const Matrix d = oracle::random_symmetric(6, rng);
  const Matrix y = gaussian(5, 2, rng);
  const Matrix t = oracle::random_plan_like(6, 5, rng);
  const double base = gw_embedding_objective(d, y, t, 1e-12);
  Matrix shifted = y;
  shifted.rowwise() += Eigen::RowVector2d(3.5, -1.25);
  EXPECT_NEAR(gw_embedding_objective(d, shifted, t, 1e-12), base, 1e-10);
  const double a = 0.7;
  Eigen::Matrix2d rot;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  EXPECT_NEAR(gw_embedding_objective(d, y * rot, t, 1e-12), base, 1e-10);
}

TEST(GwMds, GivenExactEmbeddingIsImmediatelyOptimal) {
  std::mt19937_64 rng(36);
  const Matrix y0 = gaussian(20, 2, rng);
  const auto d = euclidean_distances(y0);
  GwMdsConfig cfg;
  cfg.init = GivenEmbeddingInit{Embedding::from_points(y0)};
  const auto mu = uniform_measure(20);
  const auto r = gwmds_embed(d, mu, mu, cfg);
  EXPECT_LE(r.cost, 1e-10);
  EXPECT_LE(r.objective_trace.front(), 1e-10);
}

TEST(GwMds, RecoversPathMetricInOneDimension) {
  GwMdsConfig cfg;
  cfg.dim = 1;
  cfg.init = RandomGaussianInit{1};
  const auto d = DistanceMatrix::validate(path3());
  const auto mu = uniform_measure(3);
  const auto r = gwmds_embed_multistart(d, mu, mu, cfg, 3, 11);
  EXPECT_LE(r.cost, 1e-6);
  expect_monotone(r.objective_trace);
  // Coordinates sorted are c, c+1, c+2.
  std::vector<double> x{r.embedding.points()(0, 0), r.embedding.points()(1, 0), r.embedding.points()(2, 0)};
  std::sort(x.begin(), x.end());
  EXPECT_NEAR(x[1] - x[0], 1.0, 1e-3);
  EXPECT_NEAR(x[2] - x[1], 1.0, 1e-3);
}

TEST(GwMds, CircleIsRecoveredUpToCorrelation) {
  const int n = 24;
  Matrix circle(n, 2);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    circle(i, 0) = 3.0 * std::cos(a);
    circle(i, 1) = 3.0 * std::sin(a);
  }
  const auto d = euclidean_distances(circle);
  const auto mu = uniform_measure(n);
  GwMdsConfig cfg;
  cfg.init = RandomGaussianInit{2};
  const auto r = gwmds_embed_multistart(d, mu, mu, cfg, 3, 5);
  expect_monotone(r.objective_trace);
  // Compare in the plan's correspondence: D against T-aligned embedding distances.
  const Matrix& t = r.plan.mass();
  const Matrix aligned = (Vector::Constant(n, double(n)).asDiagonal() * t) * r.embedding.points();
  EXPECT_GE(upper_pearson(d.values(), pairwise_distances(aligned)), 0.99);
}

TEST(GwMds, SemiRelaxedWithFewerPoints) {
  std::mt19937_64 rng(37);
  const auto d = DistanceMatrix::validate(oracle::random_point_metric(10, 2, rng));
  GwMdsConfig cfg;
  cfg.plan_solver = PlanSolver::SemiRelaxed;
  cfg.init = RandomGaussianInit{4};
  const auto r = gwmds_embed(d, uniform_measure(10), uniform_measure(3), cfg);
  EXPECT_EQ(r.embedding.size(), 3);
  EXPECT_EQ(r.plan.kind(), TransportPlan::Kind::SemiRelaxed);
  EXPECT_LE(marginal_error(r.plan.mass(), uniform_measure(10).weights()), 1e-9);
  expect_monotone(r.objective_trace);
}

TEST(GwMds, RejectsBadShapesAndConfig) {
  const auto d = DistanceMatrix::validate(path3());
  GwMdsConfig cfg;
  EXPECT_THROW(gwmds_embed(d, uniform_measure(2), uniform_measure(3), cfg), Error);
  cfg.dim = 0;
  EXPECT_THROW(gwmds_embed(d, uniform_measure(3), uniform_measure(3), cfg), Error);
  cfg.dim = 2;
  cfg.init = GivenEmbeddingInit{Embedding::from_points(Matrix::Zero(3, 1))};
  EXPECT_THROW(gwmds_embed(d, uniform_measure(3), uniform_measure(3), cfg), Error);
}

TEST(GwMds, DeterministicForFixedSeed) {
  std::mt19937_64 rng(38);
  const auto d = DistanceMatrix::validate(oracle::random_point_metric(12, 3, rng));
  const auto mu = uniform_measure(12);
  GwMdsConfig cfg;
  cfg.init = RandomGaussianInit{9};
  const auto a = gwmds_embed_multistart(d, mu, mu, cfg, 3, 1, 1);
  const auto b = gwmds_embed_multistart(d, mu, mu, cfg, 3, 1, 3);
  EXPECT_EQ(a.embedding.points(), b.embedding.points());
  EXPECT_EQ(a.cost, b.cost);
}
