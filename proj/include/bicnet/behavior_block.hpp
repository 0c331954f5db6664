#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/rng.hpp"

#include <span>
#include <vector>

namespace bicnet::behavior {

// sup_x |ECDF_a(x) - ECDF_b(x)|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Asymptotic two-sample critical value c(alpha) sqrt((m + n) / (m n)).
double ks_critical_value(double alpha, std::size_t m, std::size_t n);

enum class Activation : int { none = 0, excited = 1, inhibited = -1 };
const char* to_string(Activation a);

struct ThresholdPolicy {
  bool fixed = false;
  double value = 0.0;   // used when fixed
  double alpha = 0.05;  // otherwise the asymptotic KS critical value at this level
};

struct TaskEffect {
  Matrix delta;                            // S x K, KS distance task vs rest
  Eigen::MatrixXi sign;                    // S x K in {-1, 0, 1}
  std::vector<std::vector<Activation>> label;  // [s][k]
  Matrix threshold;                        // S x K threshold actually applied
};

// Posterior draws indexed [s][k].
using SubjectFactorDraws = std::vector<std::vector<std::vector<double>>>;

TaskEffect compute_task_effects(const SubjectFactorDraws& rest, const SubjectFactorDraws& task,
                                const ThresholdPolicy& policy = {});

struct RegressionPriors {
  double a = 1.0;
  double b = 1.0;
  double S2 = 1.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;

  static RegressionPriors from(const Hyperparameters& h) { return {h.a, h.b, h.S2, h.alpha1, h.alpha2}; }
};

RegressionState initial_regression_state(int K);

// P(pi_k = 1 | everything except beta_k), with beta_k integrated out.
double inclusion_conditional(const Vector& z, const Matrix& delta, const RegressionState& state, int k);

// theta, tau2, sigma2, blocked beta over active columns, then each (pi_k, beta_k)
// jointly from its collapsed conditional.
RegressionState regression_gibbs_sweep(const Vector& z, const Matrix& delta, RegressionState state,
                                       const RegressionPriors& priors, Rng& rng);

struct Association {
  double lower;
  double upper;
  bool associated;  // equal-tailed interval excludes zero
};

// beta_draws[k] holds the draws of coefficient k.
std::vector<Association> summarize_associations(const std::vector<std::vector<double>>& beta_draws,
                                                double level = 0.95);

struct OlsReport {
  Vector coefficient;  // per column, intercept excluded
  Vector std_error;
  Vector p_value;      // two-sided t test
  double intercept = 0.0;
  int df = 0;
};

// Auxiliary least-squares fit with an intercept, reported next to the Bayesian flags.
OlsReport ols_report(const Vector& z, const Matrix& delta);

// Subtract column means; the regression has no intercept of its own.
Vector center(const Vector& v);
Matrix center_columns(const Matrix& m);

}  // namespace bicnet::behavior
