#pragma once

#include "bicnet/core_types.hpp"

#include <set>
#include <span>
#include <vector>

namespace bicnet::posthoc {

// Target column j takes sign[j] * source column perm[j].
struct AlignmentPlan {
  std::vector<int> perm;
  std::vector<int> sign;

  static AlignmentPlan identity(int K);
  AlignmentPlan inverse() const;
  bool is_identity() const;
};

// Greedy on corr(|draw column|, |reference column|): highest remaining pair first,
// ties to lower indices.
std::vector<int> match_columns(const Matrix& abs_draw, const Matrix& abs_reference);

// Sign so that each column's largest-magnitude entry is positive (first on ties).
std::vector<int> sign_convention(const Matrix& lambda);

// `reference` is a signed mean of aligned loadings. Each matched column takes the
// sign that agrees with its reference column; the largest-entry convention
// decides when the inner product is zero.
AlignmentPlan align_draws(const Matrix& lambda, const Matrix& reference);

// Most frequent permutation among the plans (earliest on ties), unsigned. The
// group map follows the labeling most subjects share.
AlignmentPlan majority_plan(const std::vector<AlignmentPlan>& plans);

Matrix apply_columns(const Matrix& m, const AlignmentPlan& plan, bool with_sign = true);
IndicatorMatrix apply_columns(const IndicatorMatrix& m, const AlignmentPlan& plan);
Matrix apply_rows(const Matrix& m, const AlignmentPlan& plan, bool with_sign);
Vector apply_entries(const Vector& v, const AlignmentPlan& plan);

// Applies per-subject plans to loadings, indicators, factors (signed), log-volatilities
// and SV parameters (permuted). Pi0 columns follow the majority plan when `permute_pi0`.
void align_state(ChainState& state, const std::vector<AlignmentPlan>& plans, bool permute_pi0);

// Euclidean norm of each loading column, 1 for an all-zero column. Dividing a
// column by it and adding 2 log of it to the matching log-volatility row leaves
// the likelihood unchanged and puts every draw on one scale.
Vector loading_scale(const Matrix& lambda);

// Greedy sign/permutation match of an estimate to known loadings (benchmarks only).
AlignmentPlan align_to_truth(const Matrix& estimate, const Matrix& truth);

struct LogLik {
  double value = 0.0;
  long skipped = 0;  // time points whose covariance was not positive definite
};

// sum_t log N(y_t; 0, Lambda diag(exp h_t) Lambda' + diag(sigma2)) via the
// Woodbury identity and the matrix determinant lemma.
LogLik observed_loglik(const Matrix& y, const Matrix& lambda, const Matrix& h, const Vector& sigma2);
// Same density with an explicit N x N Cholesky per time point.
LogLik observed_loglik_dense(const Matrix& y, const Matrix& lambda, const Matrix& h, const Vector& sigma2);

// Sum over every (condition, subject) series.
LogLik state_loglik(const ChainState& state, const Dataset& data);

enum class Estimator { median, mean };

struct EntrySummary {
  std::vector<double> estimate;
  std::vector<double> lower;
  std::vector<double> upper;
};

EntrySummary posterior_summary(const DrawSeries& draws, Estimator estimator, double level = 0.95);

struct GroupMap {
  IndicatorMatrix included;
  Matrix probability;
};

GroupMap threshold_group_map(const Matrix& pi_hat, double threshold);

struct PlugIn {
  std::vector<Matrix> lambda;                 // [s]
  std::vector<std::vector<Vector>> sigma2;    // [g][s]
  std::vector<std::vector<Matrix>> h;         // [g][s]
};

struct ModelScores {
  double loglik_hat = 0.0;
  double mean_deviance = 0.0;
  double p_d = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double dic = 0.0;
  long params = 0;
  long n = 0;
  long skipped = 0;
};

long parameter_count(std::span<const Matrix> lambda, int conditions);

// Loadings with inclusion frequency below one half are zeroed before they enter
// the plug-in and the parameter count.
Matrix sparse_plug_in(const Matrix& mean_lambda, const Matrix& inclusion_frequency);

ModelScores model_selection_scores(std::span<const double> loglik_draws, const PlugIn& plug_in, const Dataset& data);

// Smallest k whose AIC lies within one standard deviation (across k) of the minimum.
int pick_elbow(const std::vector<int>& ks, const std::vector<double>& aic);

double mae(const Matrix& estimate, const Matrix& truth);
double rmse_reconstruction(const Matrix& lambda_hat, const Matrix& f_hat, const Matrix& lambda, const Matrix& f);

using RegionSet = std::set<int>;

double jaccard(const RegionSet& a, const RegionSet& b);

struct MapMatching {
  std::vector<int> mapping;  // a index -> b index
  Matrix table;              // K x K Jaccard similarities
  std::vector<double> matched;
  double mean = 0.0;
  double sd = 0.0;
};

MapMatching match_maps(const std::vector<RegionSet>& a, const std::vector<RegionSet>& b);
// Maximum total similarity over all permutations; K <= 9.
double exhaustive_match_total(const Matrix& table);

std::vector<RegionSet> map_sets(const IndicatorMatrix& map);

struct CrossCorrelation {
  int best_lag = 0;
  std::vector<double> curve;  // curve[l - 1] is the correlation at lag l
};

// corr(amplitude_{t+l}, stimulus_t) for l = 1..max_lag.
CrossCorrelation lagged_crosscorr(std::span<const double> amplitude, std::span<const double> stimulus, int max_lag);

}  // namespace bicnet::posthoc
