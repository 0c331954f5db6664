#pragma once

#include "bicnet/config.hpp"
#include "bicnet/sampler.hpp"
#include "bicnet/simulate.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bicnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Writes <out>/<condition>_<subject>.csv (time x regions), manifest.json,
// scenario.json and truth.json.
void write_simulation(const std::filesystem::path& out, const simulate::SimScenario& scenario,
                      const simulate::Simulation& sim);

// All chains of one run. Chains run in parallel when threads > 1 and chains > 1,
// otherwise the blocks inside each chain use the threads.
std::vector<sampler::ChainResult> run_chains(const Dataset& data, int K, const config::RunConfig& cfg,
                                             const Hyperparameters& hyper, int threads);

struct ScoreRow {
  int K = 0;
  posthoc::ModelScores scores;
};

std::vector<ScoreRow> select_k(const config::RunConfig& cfg, const std::vector<int>& ks, int threads);

// Entry point of the executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace bicnet::cli
