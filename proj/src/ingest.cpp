#include "bicnet/ingest.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bicnet::ingest {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

double parse_cell(std::string_view cell, const fs::path& path, std::size_t line) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw ValidationError("non-numeric cell '" + std::string(cell) + "' in " + path.string() + " line " +
                          std::to_string(line));
  return v;
}

}  // namespace

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (auto cell : split(line)) row.push_back(parse_cell(cell, path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError("ragged row in " + path.string() + " line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("empty table: " + path.string());
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

void write_csv_matrix(const fs::path& path, const Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  std::string line;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) line += ',';
      line += format_double(values(i, j));
    }
    line += '\n';
    out << line;
  }
}

Dataset load_dataset(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ValidationError("missing file: " + manifest.string());
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ValidationError("manifest must be a JSON object");

  std::string rest;
  bool has_rest = false;
  if (doc.contains("rest_condition") && !doc["rest_condition"].is_null()) {
    rest = doc["rest_condition"].get<std::string>();
    has_rest = true;
  }

  std::vector<std::string> conditions;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() == "rest_condition") continue;
    if (!it.value().is_object()) throw ValidationError("condition '" + it.key() + "' must map subjects to files");
    conditions.push_back(it.key());
  }
  if (conditions.empty()) throw ValidationError("no series listed");
  if (has_rest) {
    auto pos = std::find(conditions.begin(), conditions.end(), rest);
    if (pos == conditions.end()) throw ValidationError("rest condition '" + rest + "' not listed");
    std::rotate(conditions.begin(), pos, pos + 1);
  }

  Dataset data;
  data.has_rest = has_rest;
  data.condition_names = conditions;
  for (auto it = doc[conditions.front()].begin(); it != doc[conditions.front()].end(); ++it)
    data.subject_ids.push_back(it.key());
  if (data.subject_ids.empty()) throw ValidationError("no series listed");

  const fs::path base = manifest.parent_path();
  for (const auto& cond : conditions) {
    const auto& entry = doc[cond];
    if (entry.size() != data.subject_ids.size())
      throw ValidationError("condition '" + cond + "' lists a different number of subjects");
    std::vector<Matrix> series;
    for (const auto& subject : data.subject_ids) {
      if (!entry.contains(subject))
        throw ValidationError("subject '" + subject + "' missing from condition '" + cond + "'");
      fs::path file = entry[subject].get<std::string>();
      if (file.is_relative()) file = base / file;
      RawTable raw{read_csv_matrix(file), subject, cond};
      if (raw.values.rows() < 2) throw ValidationError("series needs at least 2 time points: " + file.string());
      series.push_back(raw.values.transpose());
    }
    data.y.push_back(std::move(series));
  }

  const auto N = data.y.front().front().rows();
  for (const auto& cond : data.y)
    for (const auto& m : cond)
      if (m.rows() != N) throw ValidationError("region count mismatch");
  data.validate();
  return data;
}

void write_manifest(const fs::path& manifest, const std::vector<std::string>& conditions,
                    const std::vector<std::string>& subjects, const std::vector<std::vector<std::string>>& files,
                    bool has_rest) {
  nlohmann::ordered_json doc;
  doc["rest_condition"] = has_rest ? nlohmann::ordered_json(conditions.front()) : nlohmann::ordered_json();
  for (std::size_t g = 0; g < conditions.size(); ++g) {
    nlohmann::ordered_json entry = nlohmann::ordered_json::object();
    for (std::size_t s = 0; s < subjects.size(); ++s) entry[subjects[s]] = files[g][s];
    doc[conditions[g]] = entry;
  }
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + manifest.string());
  out << doc.dump(2) << '\n';
}

Matrix center_scale(const Matrix& series) {
  const auto T = series.cols();
  if (T < 2) throw ValidationError("center_scale needs at least 2 time points");
  Matrix out(series.rows(), T);
  for (Eigen::Index n = 0; n < series.rows(); ++n) {
    const double mean = series.row(n).mean();
    const double ss = (series.row(n).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(T - 1));
    if (!(sd > 0.0)) throw ValidationError("constant series in region " + std::to_string(n));
    out.row(n) = (series.row(n).array() - mean) / sd;
  }
  return out;
}

void standardize(Dataset& data) {
  for (auto& cond : data.y)
    for (auto& m : cond) m = center_scale(m);
}

Matrix aggregate_rois(const Matrix& voxels, const std::vector<int>& membership, int regions) {
  if (static_cast<Eigen::Index>(membership.size()) != voxels.rows())
    throw ValidationError("membership length must equal voxel count");
  Matrix sum = Matrix::Zero(regions, voxels.cols());
  std::vector<int> count(regions, 0);
  for (std::size_t v = 0; v < membership.size(); ++v) {
    const int n = membership[v];
    if (n < 1 || n > regions) throw ValidationError("voxel " + std::to_string(v) + " has invalid region label");
    sum.row(n - 1) += voxels.row(v);
    ++count[n - 1];
  }
  for (int n = 0; n < regions; ++n) {
    if (count[n] == 0) throw ValidationError("empty region " + std::to_string(n + 1));
    sum.row(n) /= static_cast<double>(count[n]);
  }
  return sum;
}

Vector BehaviorTable::measure(const std::string& name, const std::vector<std::string>& subject_order) const {
  auto col = std::find(measures.begin(), measures.end(), name);
  if (col == measures.end()) throw ValidationError("behavioral measure '" + name + "' not found");
  const auto j = std::distance(measures.begin(), col);
  Vector out(subject_order.size());
  for (std::size_t s = 0; s < subject_order.size(); ++s) {
    auto row = std::find(subjects.begin(), subjects.end(), subject_order[s]);
    if (row == subjects.end()) throw ValidationError("subject '" + subject_order[s] + "' missing from behavioral table");
    out[s] = values(std::distance(subjects.begin(), row), j);
  }
  return out;
}

BehaviorTable load_behavior(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty behavioral table");
  auto header = split(line);
  if (header.empty() || header.front() != "subject")
    throw ValidationError("behavioral table header must start with 'subject'");
  BehaviorTable table;
  for (std::size_t j = 1; j < header.size(); ++j) table.measures.emplace_back(header[j]);
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw ValidationError("ragged row in " + path.string() + " line " + std::to_string(lineno));
    table.subjects.emplace_back(cells.front());
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_cell(cells[j], path, lineno));
    rows.push_back(std::move(row));
  }
  table.values.resize(rows.size(), table.measures.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) table.values(i, j) = rows[i][j];
  return table;
}

double pooled_variance(const Dataset& data) {
  double sum = 0.0, sum2 = 0.0;
  long count = 0;
  for (const auto& cond : data.y)
    for (const auto& m : cond) {
      sum += m.sum();
      sum2 += m.squaredNorm();
      count += m.size();
    }
  if (count < 2) throw ValidationError("not enough data for variance");
  const double mean = sum / count;
  return (sum2 - count * mean * mean) / (count - 1);
}

}  // namespace bicnet::ingest
