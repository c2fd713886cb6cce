#include "gwmv/gw.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gwmv;

namespace {

Matrix two_point(double d) {
  Matrix m(2, 2);
  m << 0, d, d, 0;
  return m;
}

Matrix path3() {
  Matrix m(3, 3);
  m << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  return m;
}

DistanceMatrix dm(const Matrix& m) { return DistanceMatrix::validate(m); }

void expect_contracts(const GwResult& r, const DiscreteMeasure& mu, const DiscreteMeasure* nu) {
  EXPECT_LE(marginal_error(r.plan.mass(), mu.weights(), nu ? &nu->weights() : nullptr), 1e-9);
  for (std::size_t t = 1; t < r.objective_trace.size(); ++t) {
    EXPECT_LE(r.objective_trace[t], r.objective_trace[t - 1] + 1e-10);
  }
  EXPECT_GE(r.cost, 0.0);
}

}  // namespace

TEST(GwCost, TwoPointExamples) {
  const Matrix one = two_point(1), two = two_point(2);
  Matrix diag = Matrix::Zero(2, 2);
  diag.diagonal().setConstant(0.5);
  EXPECT_NEAR(gw_cost(one, one, diag), 0.0, 1e-15);
  // Frozen from oracle::naive_gw_cost: 0.5 + 16ab at a = b = 0.25.
  EXPECT_NEAR(oracle::naive_gw_cost(one, two, Matrix::Constant(2, 2, 0.25)), 1.5, 1e-15);
  EXPECT_NEAR(gw_cost(one, two, Matrix::Constant(2, 2, 0.25)), 1.5, 1e-14);
  EXPECT_NEAR(gw_cost(one, two, diag), 0.5, 1e-14);
}

TEST(GwCost, MatchesNaiveSumOnRandomInstances) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 10;
    const int m = 1 + (trial * 7) % 10;
    const Matrix dx = oracle::random_symmetric(n, rng, 0.0, 3.0);
    const Matrix dy = oracle::random_symmetric(m, rng, 0.0, 3.0);
    const Matrix t = oracle::random_plan_like(n, m, rng);
    const double naive = oracle::naive_gw_cost(dx, dy, t);
    EXPECT_NEAR(gw_cost(dx, dy, t), naive, 1e-8 * std::max(1.0, naive));
  }
}

TEST(GwCost, RejectsShapeMismatch) {
  EXPECT_THROW(gw_cost(two_point(1), path3(), Matrix::Constant(2, 2, 0.25)), Error);
}

TEST(GwGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3, m = 2 + (trial / 3) % 3;
    const Matrix dx = oracle::random_symmetric(n, rng, 0.0, 2.0);
    const Matrix dy = oracle::random_symmetric(m, rng, 0.0, 2.0);
    const Matrix t = oracle::random_plan_like(n, m, rng);
    const Matrix fd = oracle::central_difference(
        [&](const Matrix& p) { return oracle::naive_gw_cost(dx, dy, p); }, t, 1e-6);
    const Matrix g = gw_gradient_wrt_plan(dx, dy, t);
    EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST(GwGradient, ScalesQuadratically) {
  std::mt19937_64 rng(4);
  const Matrix dx = oracle::random_symmetric(4, rng), dy = oracle::random_symmetric(3, rng);
  const Matrix t = oracle::random_plan_like(4, 3, rng);
  const Matrix g = gw_gradient_wrt_plan(dx, dy, t);
  const Matrix g3 = gw_gradient_wrt_plan(3.0 * dx, 3.0 * dy, t);
  EXPECT_LE((g3 - 9.0 * g).norm(), 1e-12 * g3.norm());
}

TEST(GwGradient, StationaryAtZeroCostCoupling) {
  const Matrix d = path3();
  const Matrix t = Matrix(Vector::Constant(3, 1.0 / 3).asDiagonal());
  const Matrix g = gw_gradient_wrt_plan(d, d, t);
  // Directional derivative toward every vertex of the Birkhoff polytope is >= 0.
  oracle::for_each_permutation(3, [&](const std::vector<int>& p) {
    EXPECT_GE(g.cwiseProduct(oracle::permutation_coupling(p) - t).sum(), -1e-12);
  });
}

TEST(SolveGw, TwoPointSpaces) {
  const auto mu = uniform_measure(2);
  const auto r = solve_gw(dm(two_point(1)), mu, dm(two_point(2)), mu);
  EXPECT_NEAR(r.cost, 0.5, 1e-12);
  expect_contracts(r, mu, &mu);
}

TEST(SolveGw, IdenticalSpacesFromIdentityStayAtZero) {
  std::mt19937_64 rng(8);
  const auto d = dm(oracle::random_point_metric(6, 2, rng));
  const auto mu = uniform_measure(6);
  GwSolveConfig cfg;
  cfg.init = TransportPlan::diagonal(mu);
  const auto r = solve_gw(d, mu, d, mu, cfg);
  EXPECT_LE(r.cost, 1e-14);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
}

TEST(SolveGw, RecoversPermutedPathMetric) {
  const auto mu = uniform_measure(3);
  const std::vector<int> perm{2, 0, 1};
  const Matrix dy = oracle::permute_metric(path3(), perm);
  // Brute force: the only zero-cost couplings are the isometries.
  int zero_cost = 0;
  oracle::for_each_permutation(3, [&](const std::vector<int>& p) {
    if (oracle::naive_gw_cost(path3(), dy, oracle::permutation_coupling(p)) < 1e-14) ++zero_cost;
  });
  EXPECT_EQ(zero_cost, 2);  // the isometry and its reflection
  const auto r = solve_gw_multistart(dm(path3()), mu, dm(dy), mu, {}, {3, 17, 1});
  EXPECT_LE(r.cost, 1e-10);
  EXPECT_LE(oracle::naive_gw_cost(path3(), dy, r.plan.mass()), 1e-10);
  expect_contracts(r, mu, &mu);
}

TEST(SolveGw, NeverWorseThanBestPermutationUpToThreePoints) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 2;
    const Matrix dx = oracle::random_point_metric(n, 2, rng);
    const Matrix dy = oracle::random_point_metric(n, 2, rng);
    const auto mu = uniform_measure(n);
    const auto r = solve_gw(dm(dx), mu, dm(dy), mu);
    EXPECT_LE(r.cost, oracle::best_permutation_cost(dx, dy) + 1e-8) << "trial " << trial;
    expect_contracts(r, mu, &mu);
  }
}

TEST(SolveGw, StopsAtFrankWolfeStationaryPoint) {
  // A single run may stop at a non-global vertex, but never at a point with a
  // descent direction toward another vertex of the Birkhoff polytope.
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const Matrix dx = oracle::random_point_metric(4, 2, rng);
    const Matrix dy = oracle::random_point_metric(4, 2, rng);
    const auto mu = uniform_measure(4);
    const auto r = solve_gw(dm(dx), mu, dm(dy), mu);
    ASSERT_TRUE(r.converged);
    const Matrix& t = r.plan.mass();
    const Matrix g = gw_gradient_wrt_plan(dx, dy, t);
    oracle::for_each_permutation(4, [&](const std::vector<int>& p) {
      EXPECT_GE(g.cwiseProduct(oracle::permutation_coupling(p) - t).sum(), -1e-9) << "trial " << trial;
    });
  }
}

TEST(SolveGw, MultistartMatchesBestPermutationOnFourPoints) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const Matrix dx = oracle::random_point_metric(4, 2, rng);
    const Matrix dy = oracle::random_point_metric(4, 2, rng);
    const auto mu = uniform_measure(4);
    const auto r = solve_gw_multistart(dm(dx), mu, dm(dy), mu, {}, {40, 7, 1});
    EXPECT_LE(r.cost, oracle::best_permutation_cost(dx, dy) + 1e-8) << "trial " << trial;
  }
}

TEST(SolveGw, SymmetricInArguments) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto dx = dm(oracle::random_point_metric(4, 2, rng));
    const auto dy = dm(oracle::random_point_metric(4, 3, rng));
    const auto mu = uniform_measure(4);
    const auto xy = solve_gw_multistart(dx, mu, dy, mu, {}, {40, 1, 1});
    const auto yx = solve_gw_multistart(dy, mu, dx, mu, {}, {40, 2, 1});
    EXPECT_NEAR(xy.cost, yx.cost, 1e-6);
  }
}

TEST(SolveGw, UnequalSizesAndWeights) {
  std::mt19937_64 rng(12);
  Vector w(4);
  w << 0.1, 0.2, 0.3, 0.4;
  const auto mu = DiscreteMeasure::from_weights(w);
  const auto nu = uniform_measure(7);
  const auto r = solve_gw(dm(oracle::random_point_metric(4, 2, rng)), mu,
                          dm(oracle::random_point_metric(7, 2, rng)), nu);
  expect_contracts(r, mu, &nu);
}

TEST(SolveGw, ShapeMismatch) {
  const auto mu = uniform_measure(3);
  EXPECT_THROW(solve_gw(dm(two_point(1)), mu, dm(two_point(1)), uniform_measure(2)), Error);
}

TEST(SolveSrgw, IdenticalFromIdentity) {
  const auto mu = uniform_measure(3);
  GwSolveConfig cfg;
  cfg.init = TransportPlan::diagonal(mu);
  const auto r = solve_srgw(dm(path3()), mu, dm(path3()), cfg);
  EXPECT_LE(r.cost, 1e-14);
}

TEST(SolveSrgw, SeparatedClustersGoToDistinctPrototypes) {
  Matrix dx(4, 4);
  dx << 0, 0.1, 10, 10,  //
      0.1, 0, 10, 10,    //
      10, 10, 0, 0.1,    //
      10, 10, 0.1, 0;
  const Matrix dy = two_point(10);
  const auto mu = uniform_measure(4);

  // Brute force over all 2^4 hard assignments.
  double best = 1e300;
  for (int code = 0; code < 16; ++code) {
    Matrix t = Matrix::Zero(4, 2);
    for (int i = 0; i < 4; ++i) t(i, (code >> i) & 1) = 0.25;
    best = std::min(best, oracle::naive_gw_cost(dx, dy, t));
  }
  Matrix expected = Matrix::Zero(4, 2);
  expected(0, 0) = expected(1, 0) = expected(2, 1) = expected(3, 1) = 0.25;
  EXPECT_NEAR(best, oracle::naive_gw_cost(dx, dy, expected), 1e-14);

  const auto r = solve_srgw_multistart(dm(dx), mu, dm(dy), {}, {3, 5, 1});
  EXPECT_NEAR(r.cost, best, 1e-10);
  const Vector mass = r.plan.col_sums();
  EXPECT_NEAR(mass(0), 0.5, 1e-9);
  EXPECT_NEAR(mass(1), 0.5, 1e-9);
  const Matrix& t = r.plan.mass();
  const Index first = t(0, 0) > t(0, 1) ? 0 : 1;
  EXPECT_NEAR(t(0, first) + t(1, first), 0.5, 1e-9);
  EXPECT_NEAR(t(2, 1 - first) + t(3, 1 - first), 0.5, 1e-9);
  expect_contracts(r, mu, nullptr);
}

TEST(SolveSrgw, SinglePrototypeIsForced) {
  std::mt19937_64 rng(13);
  const Matrix dx = oracle::random_point_metric(6, 2, rng);
  Vector w(6);
  w << 0.05, 0.1, 0.15, 0.2, 0.2, 0.3;
  const auto mu = DiscreteMeasure::from_weights(w);
  const auto r = solve_srgw(dm(dx), mu, dm(Matrix::Zero(1, 1)));
  EXPECT_LE((r.plan.mass().col(0) - w).cwiseAbs().maxCoeff(), 1e-15);
  const double expected = w.dot(dx.cwiseAbs2() * w);
  EXPECT_NEAR(r.cost, expected, 1e-12);
}

TEST(Multistart, PermutationSelfDistance) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 3 + trial % 4;
    const Matrix d = oracle::random_point_metric(n, 2, rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto mu = uniform_measure(n);
    const auto r = solve_gw_multistart(dm(d), mu, dm(oracle::permute_metric(d, perm)), mu, {}, {5, 99, 1});
    EXPECT_LE(r.cost, 1e-6) << "trial " << trial;
  }
}

TEST(Multistart, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(15);
  const auto dx = dm(oracle::random_point_metric(8, 2, rng));
  const auto dy = dm(oracle::random_point_metric(8, 2, rng));
  const auto mu = uniform_measure(8);
  const auto a = solve_gw_multistart(dx, mu, dy, mu, {}, {4, 3, 1});
  const auto b = solve_gw_multistart(dx, mu, dy, mu, {}, {4, 3, 4});
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_EQ(a.plan.mass(), b.plan.mass());
}

TEST(RandomPlans, AreFeasible) {
  const auto mu = uniform_measure(5);
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const auto nu = DiscreteMeasure::from_weights(w);
  const auto t = random_coupling(mu, nu, 42);
  EXPECT_LE(marginal_error(t.mass(), mu.weights(), &nu.weights()), 1e-13);
  const auto s = random_semi_relaxed_plan(mu, 4, 42);
  EXPECT_LE(marginal_error(s.mass(), mu.weights()), 1e-15);
}

TEST(SolverAudit, TracksEveryRun) {
  reset_solver_audit();
  const auto mu = uniform_measure(2);
  solve_gw(dm(two_point(1)), mu, dm(two_point(2)), mu);
  const auto audit = solver_audit();
  EXPECT_EQ(audit.runs, 1);
  EXPECT_LE(audit.max_marginal_error, 1e-9);
  EXPECT_LE(audit.max_trace_increase, 1e-10);
}
