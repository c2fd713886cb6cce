#include "gwmv/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gwmv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  T value{};
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size()) {
    throw Error(Errc::ParseError,
                path.string() + ":" + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

struct CsvRows {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  bool labels_header = false;
};

CsvRows read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  CsvRows out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (trim(view.substr(1)) == "labels") out.labels_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      fields.emplace_back(view.substr(start, comma == std::string_view::npos ? view.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    out.rows.push_back(std::move(fields));
    out.line_numbers.push_back(number);
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

std::vector<int> labels_from_json(const Json& j) { return j.get<std::vector<int>>(); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::ParseError, std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(Errc::IoError, "cannot format a double");
  return std::string(buf, end);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& values) {
  auto out = open_out(path);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
  finish(out, path);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  const CsvRows csv = read_rows(path);
  if (csv.rows.empty()) throw Error(Errc::ParseError, path.string() + ": no data rows");
  const std::size_t cols = csv.rows.front().size();
  Matrix m(static_cast<Index>(csv.rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    if (csv.rows[r].size() != cols) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(csv.line_numbers[r]) + ": expected " +
                                        std::to_string(cols) + " fields");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = parse_number<double>(csv.rows[r][c], path, csv.line_numbers[r]);
    }
  }
  return m;
}

DistanceMatrix read_distance_csv(const std::filesystem::path& path) {
  return DistanceMatrix::validate(read_matrix_csv(path));
}

void write_coordinates_csv(const std::filesystem::path& path, const Matrix& points,
                           const std::optional<std::vector<int>>& labels) {
  if (labels && static_cast<Index>(labels->size()) != points.rows()) {
    throw Error(Errc::LengthMismatch, "labels length differs from the number of points");
  }
  auto out = open_out(path);
  if (labels) out << "# labels\n";
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < points.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(points(i, j));
    }
    if (labels) out << ',' << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
  finish(out, path);
}

CoordinateTable read_coordinates_csv(const std::filesystem::path& path) {
  const CsvRows csv = read_rows(path);
  if (csv.rows.empty()) throw Error(Errc::ParseError, path.string() + ": no data rows");
  const std::size_t cols = csv.rows.front().size();
  const std::size_t dims = csv.labels_header ? cols - 1 : cols;
  if (dims < 1) throw Error(Errc::ParseError, path.string() + ": no coordinate columns");
  CoordinateTable table;
  table.points.resize(static_cast<Index>(csv.rows.size()), static_cast<Index>(dims));
  if (csv.labels_header) table.labels.emplace();
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != cols) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(csv.line_numbers[r]) + ": expected " +
                                        std::to_string(cols) + " fields");
    }
    for (std::size_t c = 0; c < dims; ++c) {
      table.points(static_cast<Index>(r), static_cast<Index>(c)) = parse_number<double>(row[c], path, csv.line_numbers[r]);
    }
    if (table.labels) table.labels->push_back(parse_number<int>(row.back(), path, csv.line_numbers[r]));
  }
  if (!table.points.allFinite()) throw Error(Errc::NonFiniteInput, path.string() + ": non-finite coordinate");
  return table;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels) {
  auto out = open_out(path);
  for (const int l : labels) out << l << '\n';
  finish(out, path);
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  const CsvRows csv = read_rows(path);
  std::vector<int> labels;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    if (csv.rows[r].size() != 1) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(csv.line_numbers[r]) + ": expected one field");
    }
    labels.push_back(parse_number<int>(csv.rows[r][0], path, csv.line_numbers[r]));
  }
  if (labels.empty()) throw Error(Errc::ParseError, path.string() + ": no labels");
  return labels;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const std::filesystem::path& path, const Json& value) { write_text(path, value.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw Error(Errc::ParseError, "matrix must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.front().size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw Error(Errc::ParseError, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw Error(Errc::ParseError, "matrix entries must be numbers");
      m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Json to_json(const DistanceMatrix& d) { return Json{{"size", d.size()}, {"values", matrix_to_json(d.values())}}; }

Json to_json(const DiscreteMeasure& mu) {
  return Json{{"size", mu.size()}, {"weights", std::vector<double>(mu.weights().begin(), mu.weights().end())}};
}

Json to_json(const TransportPlan& plan) {
  return Json{{"kind", plan.kind() == TransportPlan::Kind::Full ? "full" : "semi_relaxed"},
              {"mass", matrix_to_json(plan.mass())}};
}

Json to_json(const Embedding& y) {
  return Json{{"size", y.size()}, {"dim", y.dim()}, {"points", matrix_to_json(y.points())}};
}

Json to_json(const MultiViewDataset& views) {
  Json out{{"size", views.sample_count()}, {"views", Json::array()}};
  for (const auto& v : views.views) out["views"].push_back(to_json(v));
  if (views.labels) out["labels"] = *views.labels;
  return out;
}

DistanceMatrix distance_matrix_from_json(const Json& j) {
  return DistanceMatrix::validate(matrix_from_json(field(j, "values")));
}

DiscreteMeasure measure_from_json(const Json& j) {
  const auto w = field(j, "weights").get<std::vector<double>>();
  return DiscreteMeasure::from_weights(Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size())));
}

TransportPlan plan_from_json(const Json& j) {
  Matrix mass = matrix_from_json(field(j, "mass"));
  const std::string kind = j.value("kind", "full");
  const Vector rows = mass.rowwise().sum();
  const DiscreteMeasure mu = DiscreteMeasure::from_weights(rows);
  if (kind == "semi_relaxed") return TransportPlan::semi_relaxed(std::move(mass), mu);
  if (kind != "full") throw Error(Errc::ParseError, "unknown plan kind '" + kind + "'");
  const DiscreteMeasure nu = DiscreteMeasure::from_weights(mass.colwise().sum().transpose());
  return TransportPlan::full(std::move(mass), mu, nu);
}

Embedding embedding_from_json(const Json& j) { return Embedding::from_points(matrix_from_json(field(j, "points"))); }

MultiViewDataset dataset_from_json(const Json& j) {
  std::vector<DistanceMatrix> views;
  for (const auto& v : field(j, "views")) views.push_back(distance_matrix_from_json(v));
  std::optional<std::vector<int>> labels;
  if (j.contains("labels")) labels = labels_from_json(j.at("labels"));
  return MultiViewDataset::make(std::move(views), std::move(labels));
}

}  // namespace gwmv
