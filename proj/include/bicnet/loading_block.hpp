#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/rng.hpp"

#include <span>
#include <utility>
#include <vector>

namespace bicnet::loading {

struct InvGamma {
  double shape;
  double rate;
  double mean() const { return rate / (shape - 1.0); }
};

// IG(c + T/2, d + sum_t (y_t - lambda_row f_t)^2 / 2).
InvGamma sigma2_posterior(const Eigen::Ref<const Eigen::RowVectorXd>& y_row,
                          const Eigen::Ref<const Eigen::RowVectorXd>& lambda_row, const Matrix& F, double c_sigma,
                          double d_sigma);
double update_sigma2(const Eigen::Ref<const Eigen::RowVectorXd>& y_row,
                     const Eigen::Ref<const Eigen::RowVectorXd>& lambda_row, const Matrix& F, double c_sigma,
                     double d_sigma, Rng& rng);

// One subject's data across conditions; pointers index condition g.
struct SubjectView {
  std::vector<const Matrix*> y;        // N x T_g
  std::vector<const Matrix*> f;        // K x T_g
  std::vector<const Vector*> sigma2;   // N
};

// Sufficient statistics of the (n, k) loading conditional:
// precision = sum_g sum_t f_kt^2 / sigma2_n, mean = sum_g sum_t f_kt r_nt / sigma2_n,
// with r the residual excluding factor k.
struct LoadingColumnStats {
  double precision = 0.0;
  double mean = 0.0;
};

LoadingColumnStats column_stats(const SubjectView& view, const Matrix& lambda, int n, int k);

struct SlabPosterior {
  double log_bayes_factor;  // log marginal(slab) - log marginal(spike)
  double mean;
  double var;
};

SlabPosterior slab_posterior(LoadingColumnStats stats, double tau2);
double inclusion_probability(LoadingColumnStats stats, double pi, double tau2);
// Draws (z, lambda) jointly: z from its collapsed odds, lambda from the slab posterior when z = 1.
std::pair<std::uint8_t, double> draw_loading(LoadingColumnStats stats, double pi, double tau2, Rng& rng);

// Single entry, statistics computed from scratch.
void update_loading_entry(const SubjectView& view, const Matrix& pi, double tau2, Matrix& lambda, IndicatorMatrix& z,
                          int n, int k, Rng& rng);

// All entries of one subject, n outer and k inner, with incrementally
// maintained partial residuals.
void update_subject_loadings(const SubjectView& view, const Matrix& pi, double tau2, Matrix& lambda,
                             IndicatorMatrix& z, Rng& rng);

struct FactorPosterior {
  Vector mean;
  Matrix cov;
};

// f_t | y_t ~ N(V Lambda' Gamma^-1 y_t, V), V = (Lambda' Gamma^-1 Lambda + Omega_t^-1)^-1.
FactorPosterior factor_posterior(const Matrix& lambda, const Vector& h_t, const Vector& sigma2, const Vector& y_t);

// Redraws every column of F; throws NumericalError when a precision is not positive definite.
void update_factors(const Matrix& Y, const Matrix& lambda, const Matrix& H, const Vector& sigma2, Matrix& F, Rng& rng);

// Log density, up to a constant, of the shift u in the joint move
// lambda_.k -> e^u lambda_.k, f_k -> e^-u f_k, h_k -> h_k - 2u, mu_k -> mu_k - 2u
// (every condition). The likelihood and the factor and volatility terms are
// unchanged by the move, leaving the loading and level priors and the Jacobian.
double scale_shift_logdensity(double u, double sum_sq, int nonzeros, std::span<const double> mu, double tau2,
                              double b_mu, double B_mu);

// Slice-sampling step for u started at 0.
double draw_scale_shift(double sum_sq, int nonzeros, std::span<const double> mu, double tau2, double b_mu,
                        double B_mu, Rng& rng);

// Log Metropolis ratio for exchanging columns a and b of one subject (with its
// factors, volatilities and SV parameters). Only the indicator terms under the
// group map change.
double label_swap_log_ratio(const IndicatorMatrix& z, const Matrix& pi, int a, int b);

// pi_nk ~ Beta(c a_nk + sum_s z_nks, c (1 - a_nk) + S - sum_s z_nks), kept inside (0, 1).
Matrix update_group_inclusion(std::span<const IndicatorMatrix> z, int N, int K, const Hyperparameters& hyper,
                              Rng& rng);

}  // namespace bicnet::loading
