#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace bicnet::config {

struct RunConfig {
  std::filesystem::path manifest;
  int K = 0;
  Hyperparameters hyperparameters;
  // Unset means 1 / pooled empirical variance of the (possibly standardized) data.
  std::optional<double> d_sigma;
  int chains = 1;
  long iterations = 0;  // total sweeps, burn-in included
  long burn_in = 0;
  long thin = 1;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "bicnet_out";
  bool single_subject = false;
  bool standardize = true;
  bool csv_export = true;
  sampler::InitMethod init = sampler::InitMethod::prior;
  int threads = 0;  // 0 defers to --threads / BICNET_THREADS

  StoragePolicy policy() const { return {iterations, burn_in, thin}; }
  void validate() const;
};

// Relative paths resolve against the config file's directory. Unknown fields are rejected.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::ordered_json run_config_to_json(const RunConfig& config);

// Loads and optionally standardizes the data, fills d_sigma and the prior map.
struct PreparedRun {
  Dataset data;
  Hyperparameters hyper;
};
PreparedRun prepare(const RunConfig& config);

sampler::SamplerConfig sampler_config(const RunConfig& config, const Hyperparameters& hyper, int chain, int threads);

// --threads wins, then BICNET_THREADS, then the config value, then 1.
int resolve_threads(std::optional<int> flag, int config_value);

}  // namespace bicnet::config
