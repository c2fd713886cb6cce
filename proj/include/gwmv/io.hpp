#pragma once

#include "gwmv/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gwmv {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Comma-separated rows, no header.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& values);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// n x n distance CSV, validated on read.
DistanceMatrix read_distance_csv(const std::filesystem::path& path);

struct CoordinateTable {
  Matrix points;
  std::optional<std::vector<int>> labels;
};

/// Coordinates, one row per sample. A first line `# labels` marks the last
/// column as an integer label.
void write_coordinates_csv(const std::filesystem::path& path, const Matrix& points,
                           const std::optional<std::vector<int>>& labels = std::nullopt);
CoordinateTable read_coordinates_csv(const std::filesystem::path& path);

void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& value);
Json read_json(const std::filesystem::path& path);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json to_json(const DistanceMatrix& d);
Json to_json(const DiscreteMeasure& mu);
Json to_json(const TransportPlan& plan);
Json to_json(const Embedding& y);
Json to_json(const MultiViewDataset& views);

DistanceMatrix distance_matrix_from_json(const Json& j);
DiscreteMeasure measure_from_json(const Json& j);
TransportPlan plan_from_json(const Json& j);
Embedding embedding_from_json(const Json& j);
MultiViewDataset dataset_from_json(const Json& j);

}  // namespace gwmv
