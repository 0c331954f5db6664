#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/posthoc.hpp"
#include "bicnet/sv_block.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bicnet::sampler {

// prior: Z all ones, loadings are slab draws scaled by 0.1, factors drawn with
// h = 0, sigma2 = 1, Pi0 = A. spectral: ICA-rotated principal loadings with
// least-squares factors and residual variances.
enum class InitMethod { prior, spectral };

struct SamplerConfig {
  Hyperparameters hyper;
  StoragePolicy policy;
  std::uint64_t seed = 1;
  int chain = 0;
  int threads = 1;
  // Each subject is fitted on its own with Pi0 fixed at the prior mean map.
  bool single_subject = false;
  bool adapt = true;
  InitMethod init = InitMethod::prior;
};

// One tuning record per (g, s, k), flattened as (g * S + s) * K + k.
struct ChainTuning {
  std::vector<sv::SvTuning> sv;

  static ChainTuning make(int conditions, int subjects, int K) {
    return {std::vector<sv::SvTuning>(static_cast<std::size_t>(conditions) * subjects * K)};
  }
};

class ChainFailure : public NumericalError {
 public:
  ChainFailure(const std::string& what, nlohmann::json snapshot)
      : NumericalError(what), snapshot_(std::move(snapshot)) {}
  const nlohmann::json& snapshot() const { return snapshot_; }

 private:
  nlohmann::json snapshot_;
};

// Runs fn(0..count-1) on up to `threads` threads. Work items must not share
// state. The exception of the lowest failing index is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

ChainState initialize_chain(const Dataset& data, int K, const SamplerConfig& config);

// sigma2 -> SV block -> loadings -> factors -> scale -> labels -> Pi0. Every block draws from its
// own stream keyed by (seed, chain, sweep, block, g, s, k), so the result does not
// depend on the thread count. Sweeps are numbered from 1.
void gibbs_sweep(ChainState& state, const Dataset& data, const SamplerConfig& config, ChainTuning& tuning,
                 long sweep);

nlohmann::json state_to_json(const ChainState& state);

struct ChainResult {
  PosteriorDraws draws;                     // aligned
  std::vector<std::vector<Matrix>> f_mean;  // [g][s], aligned posterior means
  std::vector<std::vector<Matrix>> h_mean;  // [g][s], on the unit-norm loading scale
  std::vector<Matrix> reference;            // [s], signed mean of aligned Lambda
  std::vector<double> trace_loglik;         // every sweep
  std::vector<long> trace_nonzeros;
  nlohmann::json acceptance;
  ChainState final_state;
};

// Draw series names and shapes.
//   lambda, z: {S, N, K}; pi0: {N, K}; mu, phi, delta2: {G, S, K};
//   sigma2: {G, S, N}; loglik: {1}
ChainResult run_chain(const Dataset& data, int K, const SamplerConfig& config,
                      const std::function<void(long)>& progress = {});

// Alignment plans for one state against per-subject references.
std::vector<posthoc::AlignmentPlan> plans_for(const std::vector<Matrix>& lambda, const std::vector<Matrix>& reference);

// Row-major blocks of one flattened draw.
std::vector<Matrix> unpack(std::span<const double> draw, std::size_t blocks, std::size_t rows, std::size_t cols);
std::vector<double> series_mean(const DrawSeries& series);

// Re-aligns every stored draw to another reference (pooling chains).
void realign(PosteriorDraws& draws, const std::vector<Matrix>& reference, bool permute_pi0);

// AIC/BIC/DIC at the posterior-mean plug-in: mean unit-norm loadings with entries
// whose inclusion frequency is below one half set to zero, mean sigma2, and the
// matching mean h path.
posthoc::ModelScores score_chain(const Dataset& data, const PosteriorDraws& draws,
                                 const std::vector<std::vector<Matrix>>& h_mean);

}  // namespace bicnet::sampler
