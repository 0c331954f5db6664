#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bicnet::simulate {

enum class LoadingMode { slab, fixed };

struct GroupMapSpec {
  double member_fraction = 0.3;
  double member_prob = 0.95;
  double nonmember_prob = 0.05;
};

struct SimScenario {
  Dimensions dims;
  std::vector<std::string> condition_names;
  std::vector<double> nonsparsity;  // per subject, in [0, 1]
  std::vector<std::vector<std::vector<double>>> mu;  // [g][s][k]
  double phi = 0.9;
  double delta2 = 0.25;
  double sigma2 = 0.0625;
  double tau2 = 1.0;
  LoadingMode mode = LoadingMode::slab;
  std::uint64_t seed = 1;
  // When non-empty, indicators are Bernoulli draws from this N x K map
  // instead of a fixed count per subject.
  Matrix group_map;

  void validate() const;
};

// Small-scale sparsity experiment: N=6, K=3, six subjects with non-sparsity
// 0.5..1.0, two conditions of `T` points, phi=0.9, delta=0.5, mu_k = 2 - k.
SimScenario small_scale_scenario(int T = 1000, std::uint64_t seed = 1);

// Homogeneous group: indicators drawn from one shared inclusion map.
SimScenario group_scenario(int N, int K, int S, int T, std::uint64_t seed, GroupMapSpec spec = {});

Matrix make_group_map(int N, int K, const GroupMapSpec& spec, Rng& rng);

int nonzero_count(double fraction, int N, int K);

// Per subject (Lambda_s, Z_s).
std::pair<std::vector<Matrix>, std::vector<IndicatorMatrix>> gen_loadings(const SimScenario& scenario);

std::vector<double> gen_sv_path(double mu, double phi, double delta2, int T, Rng& rng);
std::vector<double> gen_sv_path(double mu, double phi, double delta2, int T, std::uint64_t seed);

struct Simulation {
  Dataset data;
  ChainState truth;
};

Simulation gen_dataset(const SimScenario& scenario);

SimScenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const SimScenario& scenario);
nlohmann::json truth_to_json(const ChainState& truth, const SimScenario& scenario);

// Full joint prior draw of every latent variable. With sample_group false the
// inclusion map is fixed at the prior mean map A.
ChainState draw_from_prior(const Dimensions& dims, const Hyperparameters& hyper, bool sample_group, Rng& rng);

// y_t = Lambda f_t + eps_t, eps_t ~ N(0, diag(sigma2)).
Dataset generate_observations(const ChainState& state, const Dimensions& dims, Rng& rng);

}  // namespace bicnet::simulate
