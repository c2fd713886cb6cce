#include "gwmv/pipelines.hpp"

#include "gwmv/geometry.hpp"
#include "gwmv/metrics.hpp"
#include "gwmv/random.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gwmv;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return Errc::Empty;
}

Matrix gaussian_points(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix p(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) p(i, j) = g(rng);
  return p;
}

struct Blobs {
  MultiViewDataset views;
  std::vector<int> labels;
};

Blobs blobs(Index n, int centers, std::uint64_t seed) {
  ManifoldSpec spec;
  spec.kind = ManifoldKind::GaussianBlobs;
  spec.n = n;
  spec.centers = centers;
  spec.separation = 10.0;
  spec.seed = seed;
  const auto s = generate_manifold(spec);
  auto build = make_views(s.points, default_transforms(), {}, ViewMetric::Euclidean);
  return Blobs{std::move(build.dataset), s.labels};
}

MultiViewDataset scaled(const MultiViewDataset& views, double s) {
  std::vector<DistanceMatrix> out;
  for (const auto& v : views.views) out.push_back(v.scaled(s));
  return MultiViewDataset::make(std::move(out));
}

}  // namespace

TEST(ExtractClusters, RowArithmeticAndEmptyPrototype) {
  Matrix t(2, 3);
  t << 0.1, 0.4, 0.0, 0.3, 0.2, 0.0;
  const auto mu = uniform_measure(2);
  const auto f = extract_clusters(TransportPlan::semi_relaxed(t, mu), mu);
  EXPECT_EQ(f.hard_labels, (std::vector<int>{1, 0}));
  EXPECT_NEAR(f.soft_assignments(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(f.soft_assignments(0, 1), 0.8, 1e-15);
  EXPECT_EQ(f.soft_assignments(0, 2), 0.0);
  EXPECT_EQ(f.cluster_mass(2), 0.0);
  EXPECT_NEAR(f.cluster_mass.sum(), 1.0, 1e-12);
}

TEST(ExtractClusters, DiagonalPlanAndTies) {
  const auto mu = uniform_measure(5);
  const auto f = extract_clusters(TransportPlan::diagonal(mu), mu);
  EXPECT_EQ(f.hard_labels, (std::vector<int>{0, 1, 2, 3, 4}));
  const auto even = extract_clusters(TransportPlan::product(mu, uniform_measure(3)), mu);
  EXPECT_EQ(even.hard_labels, std::vector<int>(5, 0));
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(even.soft_assignments.row(i).sum(), 1.0, 1e-12);
  EXPECT_EQ(code_of([&] { extract_clusters(TransportPlan::diagonal(mu), uniform_measure(4)); }),
            Errc::ShapeMismatch);
}

TEST(MeanView, AveragesAndOptionallyNormalizes) {
  const auto a = euclidean_distances(gaussian_points(6, 2, 1));
  const auto views = MultiViewDataset::make({a, a.scaled(3.0)});
  EXPECT_LE((mean_view(views).values() - 2.0 * a.values()).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix normalized = mean_view(views, true).values();
  EXPECT_NEAR(normalized.sum() / 30.0, 1.0, 1e-12);
}

TEST(BaryGwmds, IdenticalPlanarViews) {
  const auto d = euclidean_distances(gaussian_points(15, 2, 2));
  const auto views = MultiViewDataset::make({d, d});
  const auto r = bary_gwmds(views, {}, {}, {3, 5, 1});
  const Matrix dy = pairwise_distances(r.sample_embedding.points());
  EXPECT_GE(distance_correlation(dy, d.values()), 0.99);
  EXPECT_NO_THROW(DistanceMatrix::validate(r.barycenter.barycenter.values()));
  EXPECT_TRUE(r.embedding.points().allFinite());
  EXPECT_EQ(r.sample_embedding.size(), 15);
}

TEST(BaryGwmds, SingleViewMatchesPlainEmbedding) {
  const auto d = euclidean_distances(gaussian_points(10, 3, 3));
  const auto views = MultiViewDataset::make({d});
  const auto mu = uniform_measure(10);
  const RunOptions opts{3, 11, 1};
  BarycenterConfig first;
  first.init = FirstViewInit{};
  const auto r = bary_gwmds(views, first, {}, opts);
  const auto plain = gwmds_embed_multistart(d, mu, mu, {}, opts.restarts, derive_seed(opts.seed, "mds"));
  EXPECT_NEAR(r.mds.cost, plain.cost, 1e-6);

  // From a random barycenter start the support comes out permuted.
  const auto planar = euclidean_distances(gaussian_points(10, 2, 4));
  const auto rp = bary_gwmds(MultiViewDataset::make({planar}), {}, {}, opts);
  const auto pp = gwmds_embed_multistart(planar, mu, mu, {}, opts.restarts, derive_seed(opts.seed, "mds"));
  EXPECT_NEAR(rp.mds.cost, pp.cost, 1e-6);
}

TEST(MeanGwmdsC, SeparatedBlobsAreRecovered) {
  const auto b = blobs(100, 2, 6);
  GwMdsConfig cfg;
  const auto r = mean_gwmds_c(b.views, 2, cfg, {3, 6, 1});
  EXPECT_EQ(ari(b.labels, r.hard_labels), 1.0);
  EXPECT_NEAR(r.cluster_mass.sum(), 1.0, 1e-9);
  EXPECT_EQ(r.prototypes.size(), 2);
}

TEST(MeanGwmdsC, SinglePrototypeIsForced) {
  const auto b = blobs(40, 2, 7);
  const auto r = mean_gwmds_c(b.views, 1, {}, {1, 0, 1});
  EXPECT_EQ(r.hard_labels, std::vector<int>(40, 0));
  ASSERT_EQ(r.cluster_mass.size(), 1);
  EXPECT_NEAR(r.cluster_mass(0), 1.0, 1e-12);
}

TEST(MeanGwmdsC, FullSupportRecoversRealizableMetric) {
  // Random prototype starts often merge two samples and strand a prototype
  // with no mass (it then gets no gradient), so start near the answer.
  const Matrix z = gaussian_points(8, 2, 8);
  const auto d = euclidean_distances(z);
  GwMdsConfig cfg;
  cfg.init = GivenEmbeddingInit{Embedding::from_points(z + 0.01 * gaussian_points(8, 2, 80))};
  const auto r = mean_gwmds_c(MultiViewDataset::make({d}), 8, cfg, {1, 8, 1});
  EXPECT_LE(r.cost, 1e-6);
  const Matrix& t = r.plan.mass();
  for (Index i = 0; i < t.rows(); ++i) EXPECT_GE(t.row(i).maxCoeff() / t.row(i).sum(), 0.99);
}

TEST(MeanGwmdsC, RejectsBadPrototypeCounts) {
  const auto b = blobs(20, 2, 9);
  EXPECT_EQ(code_of([&] { mean_gwmds_c(b.views, 21, {}); }), Errc::PrototypeCountExceedsSamples);
  EXPECT_EQ(code_of([&] { mean_gwmds_c(b.views, 0, {}); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([&] { mean_gwmds_c(MultiViewDataset{}, 2, {}); }), Errc::EmptyViews);
}

TEST(MeanGwmdsC, InvariantToViewOrder) {
  const auto b = blobs(60, 3, 10);
  const auto reversed = MultiViewDataset::make({b.views.views[1], b.views.views[0]});
  const auto r1 = mean_gwmds_c(b.views, 3, {}, {2, 4, 1});
  const auto r2 = mean_gwmds_c(reversed, 3, {}, {2, 4, 1});
  EXPECT_EQ(r1.hard_labels, r2.hard_labels);
  EXPECT_EQ(r1.plan.mass(), r2.plan.mass());
  EXPECT_EQ(r1.prototypes.points(), r2.prototypes.points());
}

TEST(MeanGwmdsC, LabelsInvariantToJointScaling) {
  const auto b = blobs(60, 3, 11);
  const auto r1 = mean_gwmds_c(b.views, 3, {}, {3, 5, 1});
  const auto r2 = mean_gwmds_c(scaled(b.views, 4.0), 3, {}, {3, 5, 1});
  EXPECT_EQ(r1.hard_labels, r2.hard_labels);
}

TEST(MeanGwmdsC, DeterministicAcrossThreadCounts) {
  const auto b = blobs(60, 3, 12);
  const auto r1 = mean_gwmds_c(b.views, 3, {}, {4, 2, 1});
  const auto r2 = mean_gwmds_c(b.views, 3, {}, {4, 2, 3});
  EXPECT_EQ(r1.plan.mass(), r2.plan.mass());
  EXPECT_EQ(r1.cost, r2.cost);
}
