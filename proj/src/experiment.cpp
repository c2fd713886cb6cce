#include "gwmv/experiment.hpp"

#include "gwmv/metrics.hpp"
#include "gwmv/pipelines.hpp"
#include "gwmv/random.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace gwmv {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad_config(const std::string& what) { throw Error(Errc::InvalidConfig, what); }

/// Typed access to one JSON object; rejects keys that were never read.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad_config(where("") + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  void get(const char* key, int& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (v.is_number_integer()) {
      out = v.get<int>();
    } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() &&
               std::abs(v.get<double>()) < 2e9) {
      out = static_cast<int>(v.get<double>());
    } else {
      bad_config(where(key) + " must be an integer");
    }
  }

  void get(const char* key, Index& out) {
    int v = static_cast<int>(out);
    get(key, v);
    out = v;
  }

  void get(const char* key, std::uint64_t& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (v.is_number_unsigned()) {
      out = v.get<std::uint64_t>();
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else {
      bad_config(where(key) + " must be a nonnegative integer");
    }
  }

  void get(const char* key, double& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_number()) bad_config(where(key) + " must be a number");
    out = v.get<double>();
  }

  void get(const char* key, bool& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_boolean()) bad_config(where(key) + " must be true or false");
    out = v.get<bool>();
  }

  void get(const char* key, std::string& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_string()) bad_config(where(key) + " must be a string");
    out = v.get<std::string>();
  }

  void get(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_array()) bad_config(where(key) + " must be an array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) bad_config(where(key) + " must be an array of numbers");
      out.push_back(x.get<double>());
    }
  }

  void get(const char* key, std::vector<int>& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_array()) bad_config(where(key) + " must be an array of integers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number_integer()) bad_config(where(key) + " must be an array of integers");
      out.push_back(x.get<int>());
    }
  }

  void get(const char* key, Eigen::Vector3d& out) {
    std::vector<double> v;
    get(key, v);
    if (!has(key)) return;
    if (v.size() != 3) bad_config(where(key) + " must have 3 entries");
    out << v[0], v[1], v[2];
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) bad_config("unknown key " + where(key.c_str()));
    }
  }

  std::string where(const char* key) const {
    if (path_.empty()) return std::string("'") + key + "'";
    if (*key == '\0') return "'" + path_ + "'";
    return "'" + path_ + "." + key + "'";
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Enum>
Enum parse_enum(const std::string& name, std::initializer_list<std::pair<const char*, Enum>> table,
                const std::string& what) {
  for (const auto& [text, value] : table) {
    if (name == text) return value;
  }
  std::string options;
  for (const auto& [text, value] : table) options += std::string(options.empty() ? "" : ", ") + text;
  bad_config(what + " must be one of " + options + "; got '" + name + "'");
}

const char* metric_name(ViewMetric m) { return m == ViewMetric::Geodesic ? "geodesic" : "euclidean"; }

ViewMetric parse_metric(const std::string& name, const std::string& what) {
  return parse_enum<ViewMetric>(name, {{"geodesic", ViewMetric::Geodesic}, {"euclidean", ViewMetric::Euclidean}},
                                what);
}

const char* method_name(EmbedMethod m) { return m == EmbedMethod::BaryGwmds ? "bary-gwmds" : "baseline-avg-mds"; }

Json transform_to_json(const ViewTransform& t) {
  auto vec = [](const Eigen::Vector3d& v) { return Json::array({v(0), v(1), v(2)}); };
  if (t.kind == ViewTransform::Kind::Rotation) {
    return Json{{"kind", "rotation"}, {"axis", vec(t.axis)}, {"angle", t.angle}};
  }
  return Json{{"kind", "deformation"}, {"scale", vec(t.scale)}, {"shear", t.shear}};
}

ViewTransform transform_from_json(const Json& j, const std::string& path) {
  Section s(j, path);
  std::string kind;
  s.get("kind", kind);
  ViewTransform t;
  if (kind == "rotation") {
    t.kind = ViewTransform::Kind::Rotation;
    s.get("axis", t.axis);
    s.get("angle", t.angle);
    if (!(t.axis.norm() > 0.0)) bad_config(s.where("axis") + " must be nonzero");
  } else if (kind == "deformation") {
    t.kind = ViewTransform::Kind::LinearDeformation;
    s.get("scale", t.scale);
    s.get("shear", t.shear);
  } else {
    bad_config(s.where("kind") + " must be rotation or deformation");
  }
  s.finish();
  try {
    t.matrix();
  } catch (const Error& e) {
    bad_config(path + ": " + e.what());
  }
  return t;
}

/// The view metric actually used for generated data: blobs default to
/// Euclidean because a k-NN graph splits well-separated blobs apart.
ViewMetric generated_metric(const ExperimentConfig& cfg, bool metric_given) {
  if (!metric_given && cfg.manifold.kind == ManifoldKind::GaussianBlobs) return ViewMetric::Euclidean;
  return cfg.view_metric;
}

struct Generated {
  ManifoldSample sample;
  ViewBuild build;
};

KnnGraphConfig knn_for(const ExperimentConfig& cfg) {
  KnnGraphConfig knn = cfg.knn;
  knn.threads = cfg.threads;
  return knn;
}

Generated generate(const ExperimentConfig& cfg) {
  ManifoldSpec spec = cfg.manifold;
  spec.seed = cfg.seed;
  ManifoldSample sample = generate_manifold(spec);
  ViewBuild build = make_views(sample.points, cfg.transforms, knn_for(cfg), cfg.view_metric);
  if (!sample.labels.empty()) {
    std::vector<int> labels;
    for (const Index i : build.kept) labels.push_back(sample.labels[static_cast<std::size_t>(i)]);
    build.dataset.labels = std::move(labels);
  }
  return Generated{std::move(sample), std::move(build)};
}

/// Views from cfg.dataset, or generated from the manifold settings when no
/// dataset directory is configured.
MultiViewDataset obtain_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.dir.empty()) return generate(cfg).build.dataset;
  return load_dataset(cfg);
}

Matrix rows_of(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

Matrix read_whitespace_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw Error(Errc::ParseError, path.string() + ":" + std::to_string(number) + ": cannot parse '" + token + "'");
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(number) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::ParseError, path.string() + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return m;
}

std::vector<fs::path> numbered_views(const fs::path& dir) {
  std::vector<fs::path> files;
  for (int s = 1;; ++s) {
    const fs::path p = dir / ("view_" + std::to_string(s) + ".csv");
    if (!fs::exists(p)) break;
    files.push_back(p);
  }
  if (files.empty()) throw Error(Errc::IoError, dir.string() + ": no view_1.csv found");
  return files;
}

MultiViewDataset from_clouds(const ExperimentConfig& cfg, std::vector<Matrix> clouds,
                             std::optional<std::vector<int>> labels) {
  std::vector<KnnGraphConfig> knn(clouds.size(), knn_for(cfg));
  if (!cfg.dataset.k_neighbors.empty()) {
    if (cfg.dataset.k_neighbors.size() != clouds.size()) {
      throw Error(Errc::InvalidConfig, "dataset.k_neighbors needs one entry per view (" +
                                           std::to_string(clouds.size()) + ")");
    }
    for (std::size_t s = 0; s < clouds.size(); ++s) knn[s].k_neighbors = cfg.dataset.k_neighbors[s];
  }
  ViewBuild build = make_views_from_clouds(clouds, knn, cfg.dataset.metric);
  if (labels) {
    std::vector<int> kept;
    for (const Index i : build.kept) kept.push_back((*labels)[static_cast<std::size_t>(i)]);
    build.dataset.labels = std::move(kept);
  }
  if (build.kept.size() != static_cast<std::size_t>(clouds.front().rows())) {
    std::cerr << "warning: " << clouds.front().rows() - static_cast<Index>(build.kept.size())
              << " samples outside the largest connected component were dropped\n";
  }
  return std::move(build.dataset);
}

Json correlations_or_null(const Matrix& points, const MultiViewDataset& views) {
  try {
    return correlation_metrics(points, views);
  } catch (const Error& e) {
    if (e.code() != Errc::ZeroVariance) throw;
    return Json{{"error", e.what()}};
  }
}

BarycenterConfig barycenter_config(const ExperimentConfig& cfg) {
  BarycenterConfig b = cfg.barycenter;
  b.inner = cfg.gw;
  b.threads = cfg.threads;
  b.restart_seed = derive_seed(cfg.seed, "barycenter");
  if (cfg.barycenter_first_view) {
    b.init = FirstViewInit{};
  } else {
    b.init = RandomSymmetricInit{derive_seed(cfg.seed, "barycenter_init")};
  }
  return b;
}

GwMdsConfig mds_config(const ExperimentConfig& cfg) {
  GwMdsConfig m = cfg.mds;
  m.inner = cfg.gw;
  double scale = 0.0;
  if (const auto* r = std::get_if<RandomGaussianInit>(&cfg.mds.init)) scale = r->scale;
  m.init = RandomGaussianInit{derive_seed(cfg.seed, "mds_init"), scale};
  m.plan_seed = derive_seed(cfg.seed, "mds_plan");
  return m;
}

RunOptions run_options(const ExperimentConfig& cfg) { return RunOptions{cfg.restarts, cfg.seed, cfg.threads}; }

Json manifest(const char* command, const ExperimentConfig& cfg) {
  return Json{{"command", command}, {"seed", cfg.seed}, {"config", config_to_json(cfg)}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_trace(const fs::path& path, const std::vector<GwMdsTraceRow>& rows) {
  std::string text = "iteration,cost,grad_norm,step_size\n";
  for (const auto& r : rows) {
    text += std::to_string(r.iteration) + "," + format_double(r.cost) + "," + format_double(r.grad_norm) + "," +
            format_double(r.step_size) + "\n";
  }
  write_text(path, text);
}

void check_run_settings(const ExperimentConfig& cfg) {
  if (cfg.restarts < 1) bad_config("restarts must be >= 1");
  if (cfg.threads < 1) bad_config("threads must be >= 1");
  if (cfg.k < 1) bad_config("cluster.k must be >= 1");
  if (cfg.barycenter.outer_iters < 1 || cfg.barycenter.restarts < 1 || cfg.barycenter.inner_restarts < 1) {
    bad_config("barycenter iteration and restart counts must be >= 1");
  }
  if (!(cfg.barycenter.tol >= 0.0)) bad_config("barycenter.tol must be >= 0");
  if (cfg.knn.k_neighbors < 1) bad_config("knn.k_neighbors must be >= 1");
  cfg.manifold.check();
  cfg.gw.check();
  GwMdsConfig m = cfg.mds;
  m.check();
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  Section root(j, "");
  root.get("seed", cfg.seed);
  root.get("restarts", cfg.restarts);
  root.get("threads", cfg.threads);
  root.get("strict", cfg.strict);
  std::string out_dir = cfg.output_dir.string();
  root.get("output_dir", out_dir);
  cfg.output_dir = out_dir;

  if (root.has("manifold")) {
    Section s(root.raw("manifold"), "manifold");
    std::string kind = to_string(cfg.manifold.kind);
    s.get("kind", kind);
    const auto parsed = manifold_kind_from_string(kind);
    if (!parsed) bad_config("manifold.kind must be swiss_roll, s_curve, moebius or blobs; got '" + kind + "'");
    cfg.manifold.kind = *parsed;
    s.get("n", cfg.manifold.n);
    s.get("noise", cfg.manifold.noise);
    s.get("centers", cfg.manifold.centers);
    s.get("sigma", cfg.manifold.sigma);
    s.get("separation", cfg.manifold.separation);
    s.finish();
  }
  if (root.has("transforms")) {
    const Json& list = root.raw("transforms");
    if (!list.is_array() || list.empty()) bad_config("'transforms' must be a nonempty array");
    cfg.transforms.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.transforms.push_back(transform_from_json(list[i], "transforms[" + std::to_string(i) + "]"));
    }
  }
  if (root.has("knn")) {
    Section s(root.raw("knn"), "knn");
    s.get("k_neighbors", cfg.knn.k_neighbors);
    s.get("symmetrize", cfg.knn.symmetrize);
    std::string policy = cfg.knn.on_disconnect == DisconnectPolicy::Error ? "error" : "largest_component";
    s.get("on_disconnect", policy);
    cfg.knn.on_disconnect = parse_enum<DisconnectPolicy>(
        policy, {{"error", DisconnectPolicy::Error}, {"largest_component", DisconnectPolicy::LargestComponent}},
        "knn.on_disconnect");
    s.finish();
  }
  bool metric_given = false;
  if (root.has("view_metric")) {
    std::string metric;
    root.get("view_metric", metric);
    if (metric != "auto") {
      cfg.view_metric = parse_metric(metric, "view_metric");
      metric_given = true;
    }
  }
  cfg.view_metric = generated_metric(cfg, metric_given);

  if (root.has("dataset")) {
    Section s(root.raw("dataset"), "dataset");
    std::string dir = cfg.dataset.dir.string();
    s.get("dir", dir);
    cfg.dataset.dir = dir;
    s.get("format", cfg.dataset.format);
    if (cfg.dataset.format != "distances" && cfg.dataset.format != "coordinates" && cfg.dataset.format != "mfeat") {
      bad_config("dataset.format must be distances, coordinates or mfeat; got '" + cfg.dataset.format + "'");
    }
    std::string metric = metric_name(cfg.dataset.metric);
    s.get("metric", metric);
    cfg.dataset.metric = parse_metric(metric, "dataset.metric");
    s.get("k_neighbors", cfg.dataset.k_neighbors);
    s.finish();
  }
  if (root.has("embed")) {
    Section s(root.raw("embed"), "embed");
    std::string method = method_name(cfg.method);
    s.get("method", method);
    cfg.method = parse_enum<EmbedMethod>(
        method, {{"bary-gwmds", EmbedMethod::BaryGwmds}, {"baseline-avg-mds", EmbedMethod::BaselineAvgMds}},
        "embed.method");
    s.finish();
  }
  if (root.has("cluster")) {
    Section s(root.raw("cluster"), "cluster");
    s.get("k", cfg.k);
    s.get("normalize_views", cfg.normalize_views);
    s.finish();
  }
  if (root.has("gw")) {
    Section s(root.raw("gw"), "gw");
    s.get("max_iters", cfg.gw.max_iters);
    s.get("tol", cfg.gw.tol);
    s.finish();
  }
  if (root.has("barycenter")) {
    Section s(root.raw("barycenter"), "barycenter");
    s.get("outer_iters", cfg.barycenter.outer_iters);
    s.get("tol", cfg.barycenter.tol);
    s.get("restarts", cfg.barycenter.restarts);
    s.get("inner_restarts", cfg.barycenter.inner_restarts);
    s.get("weights", cfg.barycenter.weights);
    std::string init = cfg.barycenter_first_view ? "first_view" : "random";
    s.get("init", init);
    cfg.barycenter_first_view =
        parse_enum<bool>(init, {{"random", false}, {"first_view", true}}, "barycenter.init");
    s.finish();
  }
  if (root.has("mds")) {
    Section s(root.raw("mds"), "mds");
    s.get("dim", cfg.mds.dim);
    s.get("lr", cfg.mds.lr);
    s.get("min_step", cfg.mds.min_step);
    s.get("armijo_c1", cfg.mds.armijo_c1);
    s.get("outer_iters", cfg.mds.outer_iters);
    s.get("grad_steps_per_plan", cfg.mds.grad_steps_per_plan);
    s.get("tol", cfg.mds.tol);
    s.get("norm_smoothing_eps", cfg.mds.norm_smoothing_eps);
    s.get("warm_start", cfg.mds.warm_start);
    s.get("initial_plan_restarts", cfg.mds.initial_plan_restarts);
    double scale = 0.0;
    s.get("init_scale", scale);
    cfg.mds.init = RandomGaussianInit{0, scale};
    s.finish();
  }
  if (root.has("sweep")) {
    Section s(root.raw("sweep"), "sweep");
    s.get("command", cfg.sweep_command);
    s.get("parameter", cfg.sweep_parameter);
    if (s.has("values")) {
      const Json& values = s.raw("values");
      if (!values.is_array()) bad_config("'sweep.values' must be an array");
      cfg.sweep_values.assign(values.begin(), values.end());
    }
    s.finish();
  }
  root.finish();
  check_run_settings(cfg);
  return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
  Json transforms = Json::array();
  for (const auto& t : cfg.transforms) transforms.push_back(transform_to_json(t));
  double init_scale = 0.0;
  if (const auto* r = std::get_if<RandomGaussianInit>(&cfg.mds.init)) init_scale = r->scale;
  Json sweep_values = Json::array();
  for (const auto& v : cfg.sweep_values) sweep_values.push_back(v);
  return Json{
      {"seed", cfg.seed},
      {"restarts", cfg.restarts},
      {"threads", cfg.threads},
      {"strict", cfg.strict},
      {"output_dir", cfg.output_dir.string()},
      {"manifold",
       {{"kind", to_string(cfg.manifold.kind)},
        {"n", cfg.manifold.n},
        {"noise", cfg.manifold.noise},
        {"centers", cfg.manifold.centers},
        {"sigma", cfg.manifold.sigma},
        {"separation", cfg.manifold.separation}}},
      {"transforms", transforms},
      {"knn",
       {{"k_neighbors", cfg.knn.k_neighbors},
        {"symmetrize", cfg.knn.symmetrize},
        {"on_disconnect", cfg.knn.on_disconnect == DisconnectPolicy::Error ? "error" : "largest_component"}}},
      {"view_metric", metric_name(cfg.view_metric)},
      {"dataset",
       {{"dir", cfg.dataset.dir.string()},
        {"format", cfg.dataset.format},
        {"metric", metric_name(cfg.dataset.metric)},
        {"k_neighbors", cfg.dataset.k_neighbors}}},
      {"embed", {{"method", method_name(cfg.method)}}},
      {"cluster", {{"k", cfg.k}, {"normalize_views", cfg.normalize_views}}},
      {"gw", {{"max_iters", cfg.gw.max_iters}, {"tol", cfg.gw.tol}}},
      {"barycenter",
       {{"outer_iters", cfg.barycenter.outer_iters},
        {"tol", cfg.barycenter.tol},
        {"restarts", cfg.barycenter.restarts},
        {"inner_restarts", cfg.barycenter.inner_restarts},
        {"weights", cfg.barycenter.weights},
        {"init", cfg.barycenter_first_view ? "first_view" : "random"}}},
      {"mds",
       {{"dim", cfg.mds.dim},
        {"lr", cfg.mds.lr},
        {"min_step", cfg.mds.min_step},
        {"armijo_c1", cfg.mds.armijo_c1},
        {"outer_iters", cfg.mds.outer_iters},
        {"grad_steps_per_plan", cfg.mds.grad_steps_per_plan},
        {"tol", cfg.mds.tol},
        {"norm_smoothing_eps", cfg.mds.norm_smoothing_eps},
        {"warm_start", cfg.mds.warm_start},
        {"initial_plan_restarts", cfg.mds.initial_plan_restarts},
        {"init_scale", init_scale}}},
      {"sweep", {{"command", cfg.sweep_command}, {"parameter", cfg.sweep_parameter}, {"values", sweep_values}}},
  };
}

MultiViewDataset load_dataset(const ExperimentConfig& cfg) {
  const fs::path& dir = cfg.dataset.dir;
  if (!fs::is_directory(dir)) throw Error(Errc::IoError, "dataset directory not found: " + dir.string());
  std::optional<std::vector<int>> labels;
  if (fs::exists(dir / "labels.csv")) labels = read_labels_csv(dir / "labels.csv");

  if (cfg.dataset.format == "distances") {
    std::vector<DistanceMatrix> views;
    for (const auto& p : numbered_views(dir)) views.push_back(read_distance_csv(p));
    return MultiViewDataset::make(std::move(views), std::move(labels));
  }
  if (cfg.dataset.format == "coordinates") {
    std::vector<Matrix> clouds;
    for (const auto& p : numbered_views(dir)) {
      CoordinateTable t = read_coordinates_csv(p);
      if (!labels && t.labels) labels = std::move(t.labels);
      clouds.push_back(std::move(t.points));
    }
    if (labels && static_cast<Index>(labels->size()) != clouds.front().rows()) {
      throw Error(Errc::LengthMismatch, "labels length differs from the number of samples");
    }
    return from_clouds(cfg, std::move(clouds), std::move(labels));
  }
  // UCI Multiple Features: 2000 digits, 200 per class in order.
  std::vector<Matrix> clouds;
  for (const char* name : {"mfeat-fou", "mfeat-fac", "mfeat-kar", "mfeat-pix", "mfeat-zer", "mfeat-mor"}) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw Error(Errc::IoError, "missing " + p.string());
    clouds.push_back(read_whitespace_table(p));
  }
  const Index n = clouds.front().rows();
  for (const auto& c : clouds) {
    if (c.rows() != n) throw Error(Errc::ShapeMismatch, "mfeat views have different sample counts");
  }
  if (!labels) {
    if (n % 10 != 0) throw Error(Errc::ParseError, "mfeat sample count must be a multiple of 10 without labels.csv");
    std::vector<int> implied(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) implied[static_cast<std::size_t>(i)] = static_cast<int>(i / (n / 10));
    labels = std::move(implied);
  }
  return from_clouds(cfg, std::move(clouds), std::move(labels));
}

Json correlation_metrics(const Matrix& sample_points, const MultiViewDataset& views) {
  const Matrix dy = pairwise_distances(sample_points);
  Json out = Json::object();
  double sum = 0.0;
  for (std::size_t s = 0; s < views.views.size(); ++s) {
    const double c = distance_correlation(dy, views.views[s].values());
    out["view_" + std::to_string(s + 1)] = c;
    sum += c;
  }
  out["mean"] = sum / static_cast<double>(views.views.size());
  return out;
}

Json cmd_generate(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Generated g = generate(cfg);
  const auto& kept = g.build.kept;
  const Matrix points = rows_of(g.sample.points, kept);
  const Matrix latent = rows_of(g.sample.latent, kept);
  const auto& labels = g.build.dataset.labels;

  const fs::path& out = cfg.output_dir;
  fs::create_directories(out);
  write_coordinates_csv(out / "points.csv", points, labels);
  {
    std::string header = "#";
    for (std::size_t c = 0; c < g.sample.latent_names.size(); ++c) {
      header += (c ? "," : " ") + g.sample.latent_names[c];
    }
    std::ostringstream body;
    for (Index i = 0; i < latent.rows(); ++i) {
      for (Index c = 0; c < latent.cols(); ++c) body << (c ? "," : "") << format_double(latent(i, c));
      body << '\n';
    }
    write_text(out / "params.csv", header + "\n" + body.str());
  }
  for (std::size_t s = 0; s < g.build.dataset.views.size(); ++s) {
    write_matrix_csv(out / ("view_" + std::to_string(s + 1) + ".csv"), g.build.dataset.views[s].values());
  }
  if (labels) write_labels_csv(out / "labels.csv", *labels);

  Json m = manifest("generate", cfg);
  m["samples_generated"] = cfg.manifold.n;
  m["samples_kept"] = kept.size();
  if (static_cast<Index>(kept.size()) != cfg.manifold.n) m["kept_indices"] = kept;
  m["views"] = g.build.dataset.view_count();
  write_json(out / "manifest.json", m);
  return Json{{"samples", kept.size()}, {"views", g.build.dataset.view_count()}, {"runtime_seconds", seconds_since(start)}};
}

Json cmd_embed(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const MultiViewDataset views = obtain_dataset(cfg);
  const fs::path& out = cfg.output_dir;
  Json metrics;
  bool converged = true;

  if (cfg.method == EmbedMethod::BaryGwmds) {
    const BaryGwmdsResult r = bary_gwmds(views, barycenter_config(cfg), mds_config(cfg), run_options(cfg));
    metrics = correlations_or_null(r.sample_embedding.points(), views);
    metrics["method"] = method_name(cfg.method);
    metrics["barycenter_objective"] = r.barycenter.objective();
    metrics["barycenter_iterations"] = r.barycenter.iterations;
    metrics["barycenter_converged"] = r.barycenter.converged;
    metrics["mds_cost"] = r.mds.cost;
    metrics["mds_outer_iterations"] = r.mds.outer_iterations;
    metrics["mds_converged"] = r.mds.converged;
    converged = r.barycenter.converged && r.mds.converged;
    fs::create_directories(out);
    write_matrix_csv(out / "embedding.csv", r.sample_embedding.points());
    write_matrix_csv(out / "support_embedding.csv", r.embedding.points());
    write_matrix_csv(out / "barycenter.csv", r.barycenter.barycenter.values());
    write_trace(out / "trace.csv", r.mds.rows);
  } else {
    const Embedding y = classical_mds(mean_view(views), cfg.mds.dim);
    metrics = correlations_or_null(y.points(), views);
    metrics["method"] = method_name(cfg.method);
    fs::create_directories(out);
    write_matrix_csv(out / "embedding.csv", y.points());
    write_trace(out / "trace.csv", {});
  }
  metrics["samples"] = views.sample_count();
  metrics["runtime_seconds"] = seconds_since(start);
  write_json(out / "metrics.json", metrics);
  write_json(out / "manifest.json", manifest("embed", cfg));
  if (cfg.strict && !converged) throw Error(Errc::NotConverged, "embedding did not converge (strict mode)");
  return metrics;
}

Json cmd_cluster(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const MultiViewDataset views = obtain_dataset(cfg);
  const ClusteringResult r = mean_gwmds_c(views, cfg.k, mds_config(cfg), run_options(cfg), cfg.normalize_views);

  Json metrics;
  if (views.labels) {
    const ClusterEvaluation e = evaluate_clustering(*views.labels, r.hard_labels);
    metrics["nmi"] = e.nmi;
    metrics["ari"] = e.ari;
  } else {
    std::cerr << "warning: no ground-truth labels; NMI and ARI skipped\n";
    metrics["no_ground_truth"] = true;
  }
  metrics["k"] = cfg.k;
  metrics["cluster_mass"] = std::vector<double>(r.cluster_mass.begin(), r.cluster_mass.end());
  metrics["effective_clusters"] = (r.cluster_mass.array() > 0.0).count();
  metrics["cost"] = r.cost;
  metrics["samples"] = views.sample_count();
  metrics["runtime_seconds"] = seconds_since(start);

  const fs::path& out = cfg.output_dir;
  fs::create_directories(out);
  write_labels_csv(out / "labels.csv", r.hard_labels);
  write_matrix_csv(out / "prototypes.csv", r.prototypes.points());
  write_matrix_csv(out / "plan.csv", r.plan.mass());
  write_matrix_csv(out / "soft_assignments.csv", r.soft_assignments);
  write_json(out / "metrics.json", metrics);
  write_json(out / "manifest.json", manifest("cluster", cfg));
  return metrics;
}

Json cmd_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_command != "cluster" && cfg.sweep_command != "embed") {
    throw Error(Errc::InvalidSweepParameter, "sweep.command must be cluster or embed");
  }
  if (cfg.sweep_parameter.empty()) throw Error(Errc::InvalidSweepParameter, "sweep.parameter is empty");
  if (cfg.sweep_values.empty()) throw Error(Errc::InvalidSweepParameter, "sweep.values is empty");

  // Every value is type-checked before anything runs.
  const Json base = config_to_json(cfg);
  std::vector<std::string> keys;
  {
    std::stringstream path(cfg.sweep_parameter);
    std::string part;
    while (std::getline(path, part, '.')) keys.push_back(part);
  }
  if (keys.empty() || keys.front() == "sweep" || keys.front() == "output_dir") {
    throw Error(Errc::InvalidSweepParameter, "cannot sweep '" + cfg.sweep_parameter + "'");
  }
  std::vector<ExperimentConfig> runs;
  for (std::size_t v = 0; v < cfg.sweep_values.size(); ++v) {
    Json j = base;
    Json* node = &j;
    for (const auto& key : keys) {
      if (!node->is_object() || !node->contains(key)) {
        throw Error(Errc::InvalidSweepParameter, "unknown sweep parameter '" + cfg.sweep_parameter + "'");
      }
      node = &(*node)[key];
    }
    *node = cfg.sweep_values[v];
    j["output_dir"] = (cfg.output_dir / ("run_" + std::to_string(v + 1))).string();
    try {
      runs.push_back(config_from_json(j));
    } catch (const Error& e) {
      throw Error(Errc::InvalidSweepParameter,
                  "value " + cfg.sweep_values[v].dump() + " for '" + cfg.sweep_parameter + "': " + e.what());
    }
  }

  const bool cluster = cfg.sweep_command == "cluster";
  std::string csv = "parameter,value,";
  csv += cluster ? "nmi,ari" : "view_correlations,mean_correlation";
  csv += ",runtime_seconds\n";
  Json rows = Json::array();
  for (std::size_t v = 0; v < runs.size(); ++v) {
    const Json m = cluster ? cmd_cluster(runs[v]) : cmd_embed(runs[v]);
    std::string value = cfg.sweep_values[v].dump();
    if (cfg.sweep_values[v].is_string()) value = cfg.sweep_values[v].get<std::string>();
    csv += cfg.sweep_parameter + "," + value + ",";
    if (cluster) {
      if (m.contains("nmi")) {
        csv += format_double(m["nmi"].get<double>()) + "," + format_double(m["ari"].get<double>());
      } else {
        csv += ",";
      }
    } else {
      std::string per_view;
      for (int s = 1; m.contains("view_" + std::to_string(s)); ++s) {
        per_view += (s > 1 ? ";" : "") + format_double(m["view_" + std::to_string(s)].get<double>());
      }
      csv += per_view + "," + (m.contains("mean") ? format_double(m["mean"].get<double>()) : std::string());
    }
    csv += "," + format_double(m["runtime_seconds"].get<double>()) + "\n";
    Json row = m;
    row["parameter"] = cfg.sweep_parameter;
    row["value"] = cfg.sweep_values[v];
    rows.push_back(std::move(row));
  }
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "sweep.csv", csv);
  write_json(cfg.output_dir / "manifest.json", manifest("sweep", cfg));
  return Json{{"rows", rows}};
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidConfig:
    case Errc::InvalidSweepParameter:
    case Errc::KTooLarge:
    case Errc::PrototypeCountExceedsSamples:
      return 2;
    case Errc::NotConverged:
    case Errc::LinearOtFailure:
    case Errc::DivisionGuard:
    case Errc::InvalidPlan:
      return 4;
    default:
      return 3;
  }
}

}  // namespace gwmv
