#include "gwmv/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

using namespace gwmv;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<int> threads;
  std::optional<std::string> out;
  bool strict = false;

  std::optional<std::string> manifold;
  std::optional<int> n;
  std::optional<int> k_neighbors;
  std::optional<double> noise;
  std::optional<std::string> view_metric;

  std::optional<std::string> dataset;
  std::optional<std::string> format;
  std::optional<std::string> method;
  std::optional<int> dim;
  std::optional<int> k;
  bool normalize_views = false;

  std::optional<std::string> sweep_command;
  std::optional<std::string> parameter;
  std::optional<std::string> values;
};

Json parse_values(const std::string& text) {
  Json out = Json::array();
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(Json::parse(item));
    } catch (const nlohmann::json::exception&) {
      out.push_back(item);
    }
  }
  return out;
}

Json build_config(const Flags& f) {
  Json j = Json::object();
  if (!f.config.empty()) {
    j = read_json(f.config);
    // A manifest from an earlier run carries its full config.
    if (j.contains("command") && j.contains("config")) j = Json(j["config"]);
  }
  if (f.seed) j["seed"] = *f.seed;
  if (f.restarts) j["restarts"] = *f.restarts;
  if (f.threads) j["threads"] = *f.threads;
  if (f.out) j["output_dir"] = *f.out;
  if (f.strict) j["strict"] = true;
  if (f.manifold) j["manifold"]["kind"] = *f.manifold;
  if (f.n) j["manifold"]["n"] = *f.n;
  if (f.noise) j["manifold"]["noise"] = *f.noise;
  if (f.k_neighbors) j["knn"]["k_neighbors"] = *f.k_neighbors;
  if (f.view_metric) j["view_metric"] = *f.view_metric;
  if (f.dataset) j["dataset"]["dir"] = *f.dataset;
  if (f.format) j["dataset"]["format"] = *f.format;
  if (f.method) j["embed"]["method"] = *f.method;
  if (f.dim) j["mds"]["dim"] = *f.dim;
  if (f.k) j["cluster"]["k"] = *f.k;
  if (f.normalize_views) j["cluster"]["normalize_views"] = true;
  if (f.sweep_command) j["sweep"]["command"] = *f.sweep_command;
  if (f.parameter) j["sweep"]["parameter"] = *f.parameter;
  if (f.values) j["sweep"]["values"] = parse_values(*f.values);
  return j;
}

void add_data_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--dataset", f.dataset, "Dataset directory (generated in memory when omitted)");
  cmd->add_option("--format", f.format, "Dataset format: distances, coordinates or mfeat");
  cmd->add_option("--dim", f.dim, "Embedding dimension");
  cmd->add_option("--manifold", f.manifold, "swiss_roll, s_curve, moebius or blobs");
  cmd->add_option("--n", f.n, "Number of generated samples");
  cmd->add_option("--k-neighbors", f.k_neighbors, "Neighbors in the k-NN graph");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view Gromov-Wasserstein embedding and clustering"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON config file (or a manifest.json from an earlier run)");
  app.add_option("--seed", f.seed, "Root random seed");
  app.add_option("--restarts", f.restarts, "Independent restarts per solve");
  app.add_option("--threads", f.threads, "Worker threads");
  app.add_option("--out", f.out, "Output directory");
  app.add_flag("--strict", f.strict, "Exit with status 4 when an optimizer does not converge");

  CLI::App* generate = app.add_subcommand("generate", "Sample a manifold and write its views");
  generate->add_option("--manifold", f.manifold, "swiss_roll, s_curve, moebius or blobs");
  generate->add_option("--n", f.n, "Number of samples");
  generate->add_option("--k-neighbors", f.k_neighbors, "Neighbors in the k-NN graph");
  generate->add_option("--noise", f.noise, "Ambient Gaussian noise");
  generate->add_option("--view-metric", f.view_metric, "geodesic, euclidean or auto");

  CLI::App* embed = app.add_subcommand("embed", "Embed a multi-view dataset");
  add_data_flags(embed, f);
  embed->add_option("--method", f.method, "bary-gwmds or baseline-avg-mds");

  CLI::App* cluster = app.add_subcommand("cluster", "Cluster a multi-view dataset");
  add_data_flags(cluster, f);
  cluster->add_option("--k", f.k, "Number of prototypes");
  cluster->add_flag("--normalize-views", f.normalize_views, "Divide each view by its mean distance first");

  CLI::App* sweep = app.add_subcommand("sweep", "Run one experiment per parameter value");
  add_data_flags(sweep, f);
  sweep->add_option("--command", f.sweep_command, "cluster or embed");
  sweep->add_option("--parameter", f.parameter, "Dotted config path, e.g. mds.dim");
  sweep->add_option("--values", f.values, "Comma-separated values");
  sweep->add_option("--k", f.k, "Number of prototypes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig cfg = config_from_json(build_config(f));
    Json result;
    if (generate->parsed()) {
      result = cmd_generate(cfg);
    } else if (embed->parsed()) {
      result = cmd_embed(cfg);
    } else if (cluster->parsed()) {
      result = cmd_cluster(cfg);
    } else {
      result = cmd_sweep(cfg);
    }
    std::cout << result.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [config]: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return 3;
  }
}
