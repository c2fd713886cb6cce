#include "gwmv/geometry.hpp"

#include "gwmv/parallel.hpp"
#include "gwmv/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>

namespace gwmv {
namespace {

struct Edge {
  Index to;
  double weight;
};

using Graph = std::vector<std::vector<Edge>>;

Graph knn_graph(const Matrix& points, const KnnGraphConfig& cfg) {
  const Index n = points.rows();
  const Matrix euclid = pairwise_distances(points);
  std::vector<std::vector<Index>> lists(static_cast<std::size_t>(n));
  std::vector<Index> order;
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    const auto closer = [&](Index a, Index b) {
      return euclid(i, a) < euclid(i, b) || (euclid(i, a) == euclid(i, b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + cfg.k_neighbors, order.end(), closer);
    lists[i].assign(order.begin(), order.begin() + cfg.k_neighbors);
  }
  std::vector<std::vector<char>> listed(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (Index i = 0; i < n; ++i) {
    for (const Index j : lists[i]) listed[i][j] = 1;
  }
  Graph graph(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool keep = cfg.symmetrize ? (listed[i][j] || listed[j][i]) : (listed[i][j] && listed[j][i]);
      if (keep) graph[i].push_back({j, euclid(i, j)});
    }
  }
  return graph;
}

std::vector<int> component_ids(const Graph& graph, int& count) {
  const std::size_t n = graph.size();
  std::vector<int> id(n, -1);
  count = 0;
  std::vector<Index> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (id[s] >= 0) continue;
    id[s] = count;
    stack.assign(1, static_cast<Index>(s));
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      for (const Edge& e : graph[v]) {
        if (id[e.to] < 0) {
          id[e.to] = count;
          stack.push_back(e.to);
        }
      }
    }
    ++count;
  }
  return id;
}

void dijkstra(const Graph& graph, Index source, double* out) {
  const std::size_t n = graph.size();
  std::fill(out, out + n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  out[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [dist, v] = queue.top();
    queue.pop();
    if (dist > out[v]) continue;
    for (const Edge& e : graph[v]) {
      const double candidate = dist + e.weight;
      if (candidate < out[e.to]) {
        out[e.to] = candidate;
        queue.emplace(candidate, e.to);
      }
    }
  }
}

}  // namespace

GeodesicResult knn_geodesic(const Matrix& points, const KnnGraphConfig& cfg) {
  const Index n = points.rows();
  if (n == 0) throw Error(Errc::ZeroSize, "no points");
  if (!points.allFinite()) throw Error(Errc::NonFiniteInput, "points contain NaN or infinity");
  if (cfg.k_neighbors < 1 || cfg.k_neighbors >= n) {
    throw Error(Errc::KTooLarge, "k_neighbors must lie in [1, n); got " + std::to_string(cfg.k_neighbors) +
                                     " for n = " + std::to_string(n));
  }
  const Graph graph = knn_graph(points, cfg);
  int count = 0;
  const std::vector<int> id = component_ids(graph, count);

  std::vector<Index> kept;
  if (count == 1) {
    kept.resize(static_cast<std::size_t>(n));
    std::iota(kept.begin(), kept.end(), Index{0});
  } else {
    if (cfg.on_disconnect == DisconnectPolicy::Error) {
      throw Error(Errc::GraphDisconnected, "k-NN graph has " + std::to_string(count) + " components");
    }
    std::vector<Index> sizes(static_cast<std::size_t>(count), 0);
    for (const int c : id) ++sizes[c];
    // Component ids are assigned in order of their smallest member, so the
    // first maximum is the tie-break by lowest index.
    const int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (Index i = 0; i < n; ++i) {
      if (id[i] == largest) kept.push_back(i);
    }
  }

  Matrix all(n, n);
  parallel_for(kept.size(), cfg.threads, [&](std::size_t s) { dijkstra(graph, kept[s], all.col(kept[s]).data()); });
  const Index m = static_cast<Index>(kept.size());
  Matrix out(m, m);
  for (Index b = 0; b < m; ++b) {
    for (Index a = 0; a < m; ++a) out(a, b) = all(kept[a], kept[b]);
  }
  out = 0.5 * (out + out.transpose()).eval();
  return GeodesicResult{DistanceMatrix::validate(std::move(out)), std::move(kept), count};
}

DistanceMatrix knn_geodesic_distances(const Matrix& points, const KnnGraphConfig& cfg) {
  return knn_geodesic(points, cfg).distances;
}

void ManifoldSpec::check() const {
  if (n < 10) throw Error(Errc::InvalidConfig, "manifold sample count must be >= 10");
  if (!(noise >= 0.0)) throw Error(Errc::InvalidConfig, "noise must be >= 0");
  if (kind == ManifoldKind::GaussianBlobs) {
    if (centers < 1) throw Error(Errc::InvalidConfig, "centers must be >= 1");
    if (!(sigma > 0.0) || !(separation >= 0.0)) throw Error(Errc::InvalidConfig, "sigma must be > 0");
  }
}

ManifoldSample generate_manifold(const ManifoldSpec& spec) {
  spec.check();
  using std::numbers::pi;
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ManifoldSample out;
  out.points.resize(spec.n, 3);

  switch (spec.kind) {
    case ManifoldKind::SwissRoll:
      out.latent.resize(spec.n, 2);
      out.latent_names = {"t", "h"};
      for (Index i = 0; i < spec.n; ++i) {
        const double t = 1.5 * pi + 3.0 * pi * unit(rng);
        const double h = 21.0 * unit(rng);
        out.points.row(i) << t * std::cos(t), h, t * std::sin(t);
        out.latent.row(i) << t, h;
      }
      break;
    case ManifoldKind::SCurve:
      out.latent.resize(spec.n, 2);
      out.latent_names = {"t", "h"};
      for (Index i = 0; i < spec.n; ++i) {
        const double t = 3.0 * pi * (unit(rng) - 0.5);
        const double h = 2.0 * unit(rng);
        const double sign = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
        out.points.row(i) << std::sin(t), h, sign * (std::cos(t) - 1.0);
        out.latent.row(i) << t, h;
      }
      break;
    case ManifoldKind::Moebius:
      out.latent.resize(spec.n, 2);
      out.latent_names = {"theta", "w"};
      for (Index i = 0; i < spec.n; ++i) {
        const double theta = 2.0 * pi * unit(rng);
        const double w = 2.0 * unit(rng) - 1.0;
        const double radius = 1.0 + 0.5 * w * std::cos(0.5 * theta);
        out.points.row(i) << radius * std::cos(theta), radius * std::sin(theta), 0.5 * w * std::sin(0.5 * theta);
        out.latent.row(i) << theta, w;
      }
      break;
    case ManifoldKind::GaussianBlobs: {
      out.latent.resize(spec.n, 2);
      out.latent_names = {"center_x", "center_y"};
      const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.centers))));
      const double spacing = spec.separation * spec.sigma;
      out.labels.resize(static_cast<std::size_t>(spec.n));
      for (Index i = 0; i < spec.n; ++i) {
        const int c = static_cast<int>(i % spec.centers);
        const double cx = spacing * (c % side);
        const double cy = spacing * (c / side);
        const double x = normal(rng), y = normal(rng), z = normal(rng);
        out.points.row(i) << cx + spec.sigma * x, cy + spec.sigma * y, spec.sigma * z;
        out.latent.row(i) << cx, cy;
        out.labels[static_cast<std::size_t>(i)] = c;
      }
      break;
    }
  }

  if (spec.noise > 0.0) {
    for (Index i = 0; i < spec.n; ++i) {
      for (Index c = 0; c < 3; ++c) out.points(i, c) += spec.noise * normal(rng);
    }
  }
  return out;
}

const char* to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::SwissRoll: return "swiss_roll";
    case ManifoldKind::SCurve: return "s_curve";
    case ManifoldKind::Moebius: return "moebius";
    case ManifoldKind::GaussianBlobs: return "blobs";
  }
  return "unknown";
}

std::optional<ManifoldKind> manifold_kind_from_string(const std::string& name) {
  for (const auto kind : {ManifoldKind::SwissRoll, ManifoldKind::SCurve, ManifoldKind::Moebius,
                          ManifoldKind::GaussianBlobs}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

ViewTransform ViewTransform::rotation(const Eigen::Vector3d& axis, double angle) {
  ViewTransform t;
  t.kind = Kind::Rotation;
  t.axis = axis;
  t.angle = angle;
  return t;
}

ViewTransform ViewTransform::deformation(const Eigen::Vector3d& scale, double shear) {
  ViewTransform t;
  t.kind = Kind::LinearDeformation;
  t.scale = scale;
  t.shear = shear;
  return t;
}

Eigen::Matrix3d ViewTransform::matrix() const {
  if (kind == Kind::Rotation) {
    if (!(axis.norm() > 0.0)) throw Error(Errc::InvalidConfig, "rotation axis must be nonzero");
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  }
  if ((scale.array() == 0.0).any() || !scale.allFinite() || !std::isfinite(shear)) {
    throw Error(Errc::InvalidConfig, "deformation must be finite and nonsingular");
  }
  Eigen::Matrix3d shear_xz = Eigen::Matrix3d::Identity();
  shear_xz(0, 2) = shear;
  return shear_xz * scale.asDiagonal();
}

Matrix ViewTransform::apply(const Matrix& points) const {
  if (points.cols() != 3) throw Error(Errc::ShapeMismatch, "view transforms act on 3-D points");
  return points * matrix().transpose();
}

std::vector<ViewTransform> default_transforms() {
  return {ViewTransform::rotation(Eigen::Vector3d::UnitY(), std::numbers::pi / 4.0),
          ViewTransform::deformation(Eigen::Vector3d(1.5, 1.0, 0.6), 0.4)};
}

ViewBuild make_views(const Matrix& points, const std::vector<ViewTransform>& transforms, const KnnGraphConfig& knn,
                     ViewMetric metric) {
  if (transforms.empty()) throw Error(Errc::EmptyViews, "no view transforms");
  std::vector<Matrix> clouds;
  for (const auto& transform : transforms) clouds.push_back(transform.apply(points));
  return make_views_from_clouds(clouds, std::vector<KnnGraphConfig>(transforms.size(), knn), metric);
}

ViewBuild make_views_from_clouds(const std::vector<Matrix>& clouds, const std::vector<KnnGraphConfig>& knn,
                                 ViewMetric metric) {
  if (clouds.empty()) throw Error(Errc::EmptyViews, "no views");
  if (knn.size() != clouds.size()) throw Error(Errc::LengthMismatch, "one k-NN config per view is required");
  const Index n = clouds.front().rows();
  std::vector<Matrix> full;
  std::vector<std::vector<Index>> kept;
  for (std::size_t s = 0; s < clouds.size(); ++s) {
    if (clouds[s].rows() != n) throw Error(Errc::ShapeMismatch, "views have different sample counts");
    if (metric == ViewMetric::Euclidean) {
      full.push_back(euclidean_distances(clouds[s]).values());
      std::vector<Index> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), Index{0});
      kept.push_back(std::move(all));
    } else {
      GeodesicResult g = knn_geodesic(clouds[s], knn[s]);
      full.push_back(g.distances.values());
      kept.push_back(std::move(g.kept));
    }
  }

  // Samples present in every view, in increasing original index.
  std::vector<int> hits(static_cast<std::size_t>(n), 0);
  for (const auto& k : kept) {
    for (const Index i : k) ++hits[i];
  }
  std::vector<Index> common;
  for (Index i = 0; i < n; ++i) {
    if (hits[i] == static_cast<int>(clouds.size())) common.push_back(i);
  }
  if (common.size() < 2) throw Error(Errc::GraphDisconnected, "views share fewer than two connected samples");

  std::vector<DistanceMatrix> views;
  for (std::size_t s = 0; s < clouds.size(); ++s) {
    std::vector<Index> position(static_cast<std::size_t>(n), -1);
    for (std::size_t r = 0; r < kept[s].size(); ++r) position[kept[s][r]] = static_cast<Index>(r);
    std::vector<Index> rows;
    for (const Index i : common) rows.push_back(position[i]);
    views.push_back(DistanceMatrix::validate(full[s]).subset(rows));
  }
  return ViewBuild{MultiViewDataset::make(std::move(views)), std::move(common)};
}

}  // namespace gwmv
