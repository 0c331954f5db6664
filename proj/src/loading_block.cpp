#include "bicnet/loading_block.hpp"

#include <cmath>

namespace bicnet::loading {

namespace {

constexpr double kProbabilityFloor = 1e-15;

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

InvGamma sigma2_posterior(const Eigen::Ref<const Eigen::RowVectorXd>& y_row,
                          const Eigen::Ref<const Eigen::RowVectorXd>& lambda_row, const Matrix& F, double c_sigma,
                          double d_sigma) {
  const double ss = (y_row - lambda_row * F).squaredNorm();
  return {c_sigma + 0.5 * static_cast<double>(y_row.size()), d_sigma + 0.5 * ss};
}

double update_sigma2(const Eigen::Ref<const Eigen::RowVectorXd>& y_row,
                     const Eigen::Ref<const Eigen::RowVectorXd>& lambda_row, const Matrix& F, double c_sigma,
                     double d_sigma, Rng& rng) {
  const InvGamma post = sigma2_posterior(y_row, lambda_row, F, c_sigma, d_sigma);
  return rng.inv_gamma(post.shape, post.rate);
}

LoadingColumnStats column_stats(const SubjectView& view, const Matrix& lambda, int n, int k) {
  LoadingColumnStats stats;
  for (std::size_t g = 0; g < view.y.size(); ++g) {
    const Matrix& Y = *view.y[g];
    const Matrix& F = *view.f[g];
    const double inv_s2 = 1.0 / (*view.sigma2[g])[n];
    Eigen::RowVectorXd r = Y.row(n) - lambda.row(n) * F + lambda(n, k) * F.row(k);
    stats.precision += F.row(k).squaredNorm() * inv_s2;
    stats.mean += F.row(k).dot(r) * inv_s2;
  }
  return stats;
}

SlabPosterior slab_posterior(LoadingColumnStats stats, double tau2) {
  const double var = 1.0 / (stats.precision + 1.0 / tau2);
  const double mean = var * stats.mean;
  // log of  int N(l; 0, tau2) exp(-P l^2/2 + M l) dl  (spike evaluates to 1)
  const double log_bf = 0.5 * std::log(var / tau2) + 0.5 * mean * mean / var;
  return {log_bf, mean, var};
}

double inclusion_probability(LoadingColumnStats stats, double pi, double tau2) {
  if (pi <= 0.0) return 0.0;
  if (pi >= 1.0) return 1.0;
  const SlabPosterior post = slab_posterior(stats, tau2);
  return logistic(std::log(pi) - std::log1p(-pi) + post.log_bayes_factor);
}

std::pair<std::uint8_t, double> draw_loading(LoadingColumnStats stats, double pi, double tau2, Rng& rng) {
  const double p = inclusion_probability(stats, pi, tau2);
  if (p <= 0.0 || !(rng.uniform() < p)) return {0, 0.0};
  const SlabPosterior post = slab_posterior(stats, tau2);
  return {1, post.mean + std::sqrt(post.var) * rng.normal()};
}

void update_loading_entry(const SubjectView& view, const Matrix& pi, double tau2, Matrix& lambda, IndicatorMatrix& z,
                          int n, int k, Rng& rng) {
  const auto [zi, value] = draw_loading(column_stats(view, lambda, n, k), pi(n, k), tau2, rng);
  z(n, k) = zi;
  lambda(n, k) = value;
}

void update_subject_loadings(const SubjectView& view, const Matrix& pi, double tau2, Matrix& lambda,
                             IndicatorMatrix& z, Rng& rng) {
  const std::size_t G = view.y.size();
  const Eigen::Index N = lambda.rows(), K = lambda.cols();

  // Time-major copies so that region rows and factor rows are contiguous.
  std::vector<Matrix> resid(G), ft(G);
  std::vector<Vector> fsq(G);
  for (std::size_t g = 0; g < G; ++g) {
    const Matrix& F = *view.f[g];
    ft[g] = F.transpose();
    resid[g] = (*view.y[g] - lambda * F).transpose();
    fsq[g] = F.rowwise().squaredNorm();
  }

  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index k = 0; k < K; ++k) {
      LoadingColumnStats stats;
      const double old = lambda(n, k);
      for (std::size_t g = 0; g < G; ++g) {
        const double inv_s2 = 1.0 / (*view.sigma2[g])[n];
        stats.precision += fsq[g][k] * inv_s2;
        stats.mean += (ft[g].col(k).dot(resid[g].col(n)) + old * fsq[g][k]) * inv_s2;
      }
      const auto [zi, value] = draw_loading(stats, pi(n, k), tau2, rng);
      z(n, k) = zi;
      lambda(n, k) = value;
      const double change = value - old;
      if (change != 0.0)
        for (std::size_t g = 0; g < G; ++g) resid[g].col(n) -= change * ft[g].col(k);
    }
  }
}

FactorPosterior factor_posterior(const Matrix& lambda, const Vector& h_t, const Vector& sigma2, const Vector& y_t) {
  const Matrix W = lambda.transpose() * sigma2.cwiseInverse().asDiagonal();
  Matrix Q = W * lambda;
  Q.diagonal() += (-h_t.array()).exp().matrix();
  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() != Eigen::Success) throw NumericalError("factor posterior precision is not positive definite");
  FactorPosterior post;
  post.mean = llt.solve(W * y_t);
  post.cov = llt.solve(Matrix::Identity(Q.rows(), Q.cols()));
  return post;
}

void update_factors(const Matrix& Y, const Matrix& lambda, const Matrix& H, const Vector& sigma2, Matrix& F, Rng& rng) {
  const Eigen::Index K = lambda.cols(), T = Y.cols();
  const Matrix W = lambda.transpose() * sigma2.cwiseInverse().asDiagonal();
  const Matrix base = W * lambda;
  const Matrix B = W * Y;
  Matrix Q(K, K);
  Vector eps(K);
  Eigen::LLT<Matrix> llt(K);
  for (Eigen::Index t = 0; t < T; ++t) {
    Q = base;
    Q.diagonal() += (-H.col(t).array()).exp().matrix();
    llt.compute(Q);
    if (llt.info() != Eigen::Success || !Q.allFinite())
      throw NumericalError("factor posterior precision is not positive definite at t=" + std::to_string(t));
    for (Eigen::Index k = 0; k < K; ++k) eps[k] = rng.normal();
    F.col(t) = llt.solve(B.col(t)) + llt.matrixU().solve(eps);
  }
  if (!F.allFinite()) throw NumericalError("non-finite factor draw");
}

double label_swap_log_ratio(const IndicatorMatrix& z, const Matrix& pi, int a, int b) {
  auto term = [&](int n, int col, int slot) {
    return z(n, col) ? std::log(pi(n, slot)) : std::log1p(-pi(n, slot));
  };
  double lr = 0.0;
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    const int i = static_cast<int>(n);
    lr += term(i, a, b) + term(i, b, a) - term(i, a, a) - term(i, b, b);
  }
  return lr;
}

Matrix update_group_inclusion(std::span<const IndicatorMatrix> z, int N, int K, const Hyperparameters& hyper,
                              Rng& rng) {
  const double S = static_cast<double>(z.size());
  Matrix pi(N, K);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) {
      double count = 0.0;
      for (const auto& zs : z) count += zs(n, k);
      const double a = hyper.prior_mean(n, k);
      const double draw = rng.beta(hyper.c * a + count, hyper.c * (1.0 - a) + S - count);
      pi(n, k) = std::clamp(draw, kProbabilityFloor, 1.0 - kProbabilityFloor);
    }
  return pi;
}

double scale_shift_logdensity(double u, double sum_sq, int nonzeros, std::span<const double> mu, double tau2,
                              double b_mu, double B_mu) {
  double lp = -sum_sq * std::expm1(2.0 * u) / (2.0 * tau2) + nonzeros * u;
  for (double m : mu) {
    const double before = m - b_mu, after = m - 2.0 * u - b_mu;
    lp -= (after * after - before * before) / (2.0 * B_mu);
  }
  return lp;
}

double draw_scale_shift(double sum_sq, int nonzeros, std::span<const double> mu, double tau2, double b_mu,
                        double B_mu, Rng& rng) {
  auto logf = [&](double u) { return scale_shift_logdensity(u, sum_sq, nonzeros, mu, tau2, b_mu, B_mu); };
  constexpr double width = 0.5;
  constexpr int max_steps = 50;
  const double level = logf(0.0) + std::log(rng.uniform());
  double lo = -width * rng.uniform();
  double hi = lo + width;
  for (int i = 0; i < max_steps && logf(lo) > level; ++i) lo -= width;
  for (int i = 0; i < max_steps && logf(hi) > level; ++i) hi += width;
  for (int i = 0; i < 200; ++i) {
    const double u = lo + (hi - lo) * rng.uniform();
    if (logf(u) > level) return u;
    (u < 0.0 ? lo : hi) = u;
  }
  return 0.0;
}

}  // namespace bicnet::loading
