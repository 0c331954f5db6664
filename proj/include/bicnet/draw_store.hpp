#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/sampler.hpp"

#include <filesystem>
#include <vector>

namespace bicnet::store {

// One file per series: a JSON header line (name, shape, draw count, layout),
// then row-major little-endian float64 values, draw after draw.
void write_series(const std::filesystem::path& path, const DrawSeries& series, const StoragePolicy& policy);
DrawSeries read_series(const std::filesystem::path& path);

// Header "sweep,<name>[i][j]..." then one row per draw.
void write_series_csv(const std::filesystem::path& path, const DrawSeries& series);

// A single array of the given row-major shape stored in the same format.
void write_array(const std::filesystem::path& path, const std::string& name, const std::vector<std::size_t>& shape,
                 std::span<const double> values);
std::vector<double> read_array(const std::filesystem::path& path, std::vector<std::size_t>* shape = nullptr);

struct StoredChain {
  PosteriorDraws draws;
  std::vector<std::vector<Matrix>> f_mean;  // [g][s]
  std::vector<std::vector<Matrix>> h_mean;
  std::vector<Matrix> reference;            // [s]
};

// chain directory layout: <series>.bin (+ .csv when csv), f_mean_g<g>.bin,
// h_mean_g<g>.bin, reference.bin, trace.csv, acceptance.json.
void save_chain(const std::filesystem::path& dir, const sampler::ChainResult& result, bool csv);
StoredChain load_chain(const std::filesystem::path& dir);

}  // namespace bicnet::store
