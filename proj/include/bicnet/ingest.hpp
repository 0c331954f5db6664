#pragma once

#include "bicnet/core_types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bicnet::ingest {

// Headerless comma-separated numeric table. Rows are time points.
Matrix read_csv_matrix(const std::filesystem::path& path);
// Shortest round-trip decimal text; byte-stable for identical input.
void write_csv_matrix(const std::filesystem::path& path, const Matrix& values);
std::string format_double(double v);

// One series per (condition, subject). Transposed to regions x time on load.
struct RawTable {
  Matrix values;  // T x N
  std::string subject;
  std::string condition;
};

// Manifest: {"rest_condition": "<name>", "<condition>": {"<subject>": "<path>", ...}, ...}.
// Relative paths resolve against the manifest's directory. The rest condition is
// placed at index 0; other conditions keep file order.
Dataset load_dataset(const std::filesystem::path& manifest);

void write_manifest(const std::filesystem::path& manifest, const std::vector<std::string>& conditions,
                    const std::vector<std::string>& subjects,
                    const std::vector<std::vector<std::string>>& files /* [g][s] */, bool has_rest);

// Each row to mean 0, sample sd 1 (T - 1 denominator).
Matrix center_scale(const Matrix& series);
void standardize(Dataset& data);

// Region n is the mean of its member voxel rows; membership is 1-based.
Matrix aggregate_rois(const Matrix& voxels, const std::vector<int>& membership, int regions);

struct BehaviorTable {
  std::vector<std::string> subjects;
  std::vector<std::string> measures;
  Matrix values;  // subjects x measures

  // Column for `measure`, reordered to follow `subject_order`.
  Vector measure(const std::string& name, const std::vector<std::string>& subject_order) const;
};

// CSV with header "subject,<measure1>,...".
BehaviorTable load_behavior(const std::filesystem::path& path);

// Empirical variance of all entries of all series; used for the default d_sigma.
double pooled_variance(const Dataset& data);

}  // namespace bicnet::ingest
