// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//   acceptance [--quick] [--only 1,3,...]

#include "bicnet/baseline.hpp"
#include "bicnet/behavior_block.hpp"
#include "bicnet/ingest.hpp"
#include "bicnet/loading_block.hpp"
#include "bicnet/posthoc.hpp"
#include "bicnet/sampler.hpp"
#include "bicnet/simulate.hpp"
#include "bicnet/stats.hpp"
#include "bicnet/sv_block.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace bicnet;

namespace {

constexpr double kPi = 3.14159265358979323846;

bool g_quick = false;
int g_geweke_samples = 5000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double mean_of(const std::vector<double>& v) { return stats::mean(v); }
double var_of(const std::vector<double>& v) { return stats::variance(v); }

// Batch-means variance of the sample mean.
double batch_var_of_mean(const std::vector<double>& v, int batches = 50) {
  const std::size_t len = v.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += v[b * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  return var_of(means) / batches;
}

Hyperparameters default_hyper(const Dataset& data) {
  Hyperparameters hy;
  hy.d_sigma = 1.0 / ingest::pooled_variance(data);
  return hy;
}

sampler::SamplerConfig fit_config(const Dataset& data, long total, long burn, std::uint64_t seed, bool single) {
  sampler::SamplerConfig cfg;
  cfg.hyper = default_hyper(data);
  cfg.policy = {total, burn, 1};
  cfg.seed = seed;
  cfg.single_subject = single;
  return cfg;
}

// Per-subject posterior medians of the loadings, [s] N x K.
std::vector<Matrix> median_lambda(const sampler::ChainResult& r, int S, int N, int K) {
  const auto sm = posthoc::posterior_summary(r.draws.at("lambda"), posthoc::Estimator::median);
  return sampler::unpack(sm.estimate, S, N, K);
}

Matrix mean_pi0(const sampler::ChainResult& r, int N, int K) {
  return sampler::unpack(sampler::series_mean(r.draws.at("pi0")), 1, N, K).front();
}

// ---- 1: small-scale recovery ----

struct Recovery {
  std::vector<double> mae, rmse;
};

Recovery recovery_run(int T, long kept, long burn, std::uint64_t seed) {
  const auto sc = simulate::small_scale_scenario(T, seed);
  const auto sim = simulate::gen_dataset(sc);
  const int N = sc.dims.N, K = sc.dims.K, S = sc.dims.S;
  const auto r = sampler::run_chain(sim.data, K, fit_config(sim.data, kept + burn, burn, seed, true));
  const auto est = median_lambda(r, S, N, K);
  Recovery out;
  for (int s = 0; s < S; ++s) {
    const auto plan = posthoc::align_to_truth(est[s], sim.truth.lambda[s]);
    const Matrix lam = posthoc::apply_columns(est[s], plan);
    out.mae.push_back(posthoc::mae(lam, sim.truth.lambda[s]));
    double sq = 0.0;
    long t_total = 0;
    for (int g = 0; g < sc.dims.conditions(); ++g) {
      const Matrix f = posthoc::apply_rows(r.f_mean[g][s], plan, true);
      const double e = posthoc::rmse_reconstruction(lam, f, sim.truth.lambda[s], sim.truth.cond[g][s].F);
      sq += e * e * f.cols();
      t_total += f.cols();
    }
    out.rmse.push_back(std::sqrt(sq / static_cast<double>(t_total)));
  }
  return out;
}

std::string describe(const Recovery& r) {
  std::string s = "MAE";
  for (double v : r.mae) s += " " + fixed(v);
  s += ", RMSE";
  for (double v : r.rmse) s += " " + fixed(v);
  return s;
}

Outcome criterion1() {
  const int T = g_quick ? 300 : 1000;
  const long kept = g_quick ? 2000 : 10000, burn = g_quick ? 2000 : 10000;
  const Recovery full = recovery_run(T, kept, burn, 1);
  const Recovery fast = recovery_run(300, 2000, 2000, 1);
  const double full_mae = *std::max_element(full.mae.begin(), full.mae.end());
  const double fast_mae = *std::max_element(fast.mae.begin(), fast.mae.end());
  bool rmse_ok = true;
  for (double v : full.rmse) rmse_ok = rmse_ok && v >= 0.35 && v <= 0.60;
  Outcome o;
  o.pass = full_mae <= 0.10 && rmse_ok && fast_mae <= 0.15;
  o.detail = "T=" + std::to_string(T) + ": " + describe(full) + "; T=300: " + describe(fast);
  return o;
}

// ---- 2: group recovery against PCA-varimax ----

Outcome criterion2() {
  const int N = 30, K = 6, S = 8, T = 200;
  double bic_lambda = 0.0, base_lambda = 0.0, bic_pi = 0.0, base_pi = 0.0;
  const auto sc = simulate::group_scenario(N, K, S, T, 2);
  const auto sim = simulate::gen_dataset(sc);
  const long sweeps = g_quick ? 1500 : 6000;
  const auto r = sampler::run_chain(sim.data, K, fit_config(sim.data, sweeps, sweeps / 2, 2, false));
  const auto est = median_lambda(r, S, N, K);
  Matrix base_freq = Matrix::Zero(N, K);
  for (int s = 0; s < S; ++s) {
    const auto plan = posthoc::align_to_truth(est[s], sim.truth.lambda[s]);
    bic_lambda += posthoc::mae(posthoc::apply_columns(est[s], plan), sim.truth.lambda[s]) / S;
    const Matrix pv = baseline::pca_varimax(baseline::concatenate_conditions(sim.data, s), K);
    const auto bplan = posthoc::align_to_truth(pv, sim.truth.lambda[s]);
    const Matrix aligned = posthoc::apply_columns(pv, bplan);
    base_lambda += posthoc::mae(aligned, sim.truth.lambda[s]) / S;
    base_freq += baseline::threshold_loadings(aligned).cast<double>() / S;
  }
  Matrix pi_hat = mean_pi0(r, N, K);
  pi_hat = posthoc::apply_columns(pi_hat, posthoc::align_to_truth(pi_hat, sc.group_map), false);
  bic_pi = posthoc::mae(pi_hat, sc.group_map);
  const Matrix base_pi_cols = posthoc::apply_columns(base_freq, posthoc::align_to_truth(base_freq, sc.group_map), false);
  base_pi = posthoc::mae(base_pi_cols, sc.group_map);
  Outcome o;
  o.pass = bic_lambda < base_lambda && bic_pi < base_pi;
  o.detail = "Lambda MAE " + fixed(bic_lambda) + " vs baseline " + fixed(base_lambda) + ", Pi0 MAE " + fixed(bic_pi) +
             " vs baseline " + fixed(base_pi);
  return o;
}

// ---- 3: Geweke joint-distribution tests ----

struct GewekeResult {
  std::vector<std::string> names;
  std::vector<double> z;
};

GewekeResult geweke_compare(const std::vector<std::string>& names, const std::vector<std::vector<double>>& marginal,
                            const std::vector<std::vector<double>>& successive) {
  GewekeResult out{names, {}};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double se2 = var_of(marginal[i]) / marginal[i].size() + batch_var_of_mean(successive[i]);
    out.z.push_back((mean_of(marginal[i]) - mean_of(successive[i])) / std::sqrt(se2));
  }
  return out;
}

std::vector<double> model_functions(const ChainState& st) {
  double lam2 = 0.0, z = 0.0, ls2 = 0.0, mu = 0.0, phi = 0.0, d2 = 0.0, h = 0.0, f2 = 0.0, lamf = 0.0;
  double count_l = 0.0, count_c = 0.0, count_t = 0.0;
  for (std::size_t s = 0; s < st.lambda.size(); ++s) {
    lam2 += st.lambda[s].squaredNorm();
    z += st.z[s].cast<double>().sum();
    count_l += st.lambda[s].size();
  }
  for (const auto& per : st.cond)
    for (std::size_t s = 0; s < per.size(); ++s) {
      const ConditionState& c = per[s];
      ls2 += c.sigma2.array().log().sum();
      mu += c.mu.sum();
      phi += c.phi.sum();
      d2 += c.delta2.array().log().sum();
      h += c.H.mean();
      f2 += std::tanh(c.F.array().square().mean());
      lamf += std::tanh((st.lambda[s] * c.F).array().square().mean());
      count_c += c.mu.size();
      count_t += 1.0;
    }
  return {lam2 / count_l,
          z / count_l,
          ls2 / (count_t * st.lambda.front().rows()),
          mu / count_c,
          phi / count_c,
          d2 / count_c,
          h / count_t,
          f2 / count_t,
          lamf / count_t,
          st.pi0.mean()};
}

GewekeResult geweke_full(int samples) {
  const Dimensions dims{4, 2, 2, {30, 30}};
  Hyperparameters hy;
  sampler::SamplerConfig cfg;
  cfg.hyper = hy;
  cfg.policy = {samples, 0, 1};
  cfg.seed = 77;
  cfg.adapt = false;
  const std::vector<std::string> names = {"lambda^2", "z", "log sigma2", "mu", "phi", "log delta2",
                                          "h",        "tanh f^2", "tanh (Lambda f)^2", "pi0"};
  std::vector<std::vector<double>> marg(names.size()), succ(names.size());
  Rng rng(2024);
  for (int i = 0; i < samples; ++i) {
    const auto v = model_functions(simulate::draw_from_prior(dims, hy, true, rng));
    for (std::size_t j = 0; j < v.size(); ++j) marg[j].push_back(v[j]);
  }
  ChainState st = simulate::draw_from_prior(dims, hy, true, rng);
  Dataset data = simulate::generate_observations(st, dims, rng);
  auto tuning = sampler::ChainTuning::make(2, 2, 2);
  for (int i = 1; i <= samples; ++i) {
    sampler::gibbs_sweep(st, data, cfg, tuning, i);
    data = simulate::generate_observations(st, dims, rng);
    const auto v = model_functions(st);
    for (std::size_t j = 0; j < v.size(); ++j) succ[j].push_back(v[j]);
  }
  return geweke_compare(names, marg, succ);
}

struct RegressionDraw {
  RegressionState st;
  Vector z;
};

RegressionState prior_regression(int K, const behavior::RegressionPriors& pr, Rng& rng) {
  RegressionState st = behavior::initial_regression_state(K);
  st.theta = rng.beta(pr.a, pr.b);
  st.tau2 = rng.inv_gamma(0.5, 0.5 * pr.S2);
  st.sigma2 = rng.inv_gamma(pr.alpha1, pr.alpha2);
  for (int k = 0; k < K; ++k) {
    st.pi[k] = rng.uniform() < st.theta ? 1 : 0;
    st.beta[k] = st.pi[k] ? std::sqrt(st.sigma2 * st.tau2) * rng.normal() : 0.0;
  }
  return st;
}

Vector regression_data(const Matrix& delta, const RegressionState& st, Rng& rng) {
  Vector z = delta * st.beta;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] += std::sqrt(st.sigma2) * rng.normal();
  return z;
}

std::vector<double> regression_functions(const RegressionState& st) {
  return {st.theta, static_cast<double>(st.pi.cast<int>().sum()), std::log(st.tau2), std::log(st.sigma2),
          std::atan(st.beta[0]), std::atan(st.beta[1]), std::atan(st.beta[0] * st.beta[1])};
}

GewekeResult geweke_regression(int samples) {
  const int K = 2, S = 10;
  Rng rng(99);
  Matrix delta(S, K);
  for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = 2.0 * rng.uniform() - 1.0;
  const behavior::RegressionPriors pr{};
  const std::vector<std::string> names = {"theta", "active", "log tau2", "log sigma2", "atan beta1", "atan beta2",
                                          "atan beta1 beta2"};
  std::vector<std::vector<double>> marg(names.size()), succ(names.size());
  for (int i = 0; i < samples; ++i) {
    const auto v = regression_functions(prior_regression(K, pr, rng));
    for (std::size_t j = 0; j < v.size(); ++j) marg[j].push_back(v[j]);
  }
  RegressionState st = prior_regression(K, pr, rng);
  Vector z = regression_data(delta, st, rng);
  for (int i = 0; i < samples; ++i) {
    st = behavior::regression_gibbs_sweep(z, delta, st, pr, rng);
    z = regression_data(delta, st, rng);
    const auto v = regression_functions(st);
    for (std::size_t j = 0; j < v.size(); ++j) succ[j].push_back(v[j]);
  }
  return geweke_compare(names, marg, succ);
}

Outcome criterion3() {
  const int samples = g_geweke_samples;
  const auto full = geweke_full(samples);
  const auto reg = geweke_regression(samples);
  double worst = 0.0;
  std::string detail = "full sampler |z|:";
  for (std::size_t i = 0; i < full.z.size(); ++i) {
    worst = std::max(worst, std::abs(full.z[i]));
    detail += " " + full.names[i] + "=" + fixed(full.z[i], 2);
  }
  detail += "; regression |z|:";
  for (std::size_t i = 0; i < reg.z.size(); ++i) {
    worst = std::max(worst, std::abs(reg.z[i]));
    detail += " " + reg.names[i] + "=" + fixed(reg.z[i], 2);
  }
  return {worst < 4.0, "max |z| " + fixed(worst, 2) + "; " + detail};
}

// ---- 4: conditional-posterior oracles ----

double z_score(const std::vector<double>& draws, double mean, double var) {
  return (mean_of(draws) - mean) / std::sqrt(var / draws.size());
}

Outcome criterion4() {
  std::vector<std::string> fails;
  std::ostringstream detail;
  Rng rng(404);
  const int draws = 100000;

  {  // sigma2 inverse-gamma moments
    Matrix F(2, 15);
    for (Eigen::Index i = 0; i < F.size(); ++i) F.data()[i] = rng.normal();
    Eigen::RowVectorXd lam(2);
    lam << 0.6, -0.8;
    Eigen::RowVectorXd y = lam * F;
    for (Eigen::Index t = 0; t < y.size(); ++t) y[t] += 0.7 * rng.normal();
    const double a = 2.0 + 7.5, b = 0.5 + 0.5 * (y - lam * F).squaredNorm();
    std::vector<double> v;
    for (int i = 0; i < draws; ++i) v.push_back(loading::update_sigma2(y, lam, F, 2.0, 0.5, rng));
    const double z = z_score(v, b / (a - 1), b * b / ((a - 1) * (a - 1) * (a - 2)));
    detail << "sigma2 z=" << fixed(z, 2);
    if (std::abs(z) > 3.0) fails.push_back("sigma2");
  }
  {  // group inclusion Beta moments
    Hyperparameters hy;
    hy.c = 3.0;
    hy.a_default = 0.4;
    std::vector<IndicatorMatrix> zs(5, IndicatorMatrix::Zero(1, 1));
    zs[0](0, 0) = zs[3](0, 0) = 1;
    const double a = 3.0 * 0.4 + 2, b = 3.0 * 0.6 + 3;
    std::vector<double> v;
    for (int i = 0; i < draws; ++i) v.push_back(loading::update_group_inclusion(zs, 1, 1, hy, rng)(0, 0));
    const double z = z_score(v, a / (a + b), a * b / ((a + b) * (a + b) * (a + b + 1)));
    detail << ", Pi0 z=" << fixed(z, 2);
    if (std::abs(z) > 3.0) fails.push_back("Pi0");
  }
  {  // spike-and-slab odds against a grid
    const int T = 4;
    Matrix y(1, T), f(2, T);
    for (int t = 0; t < T; ++t) {
      y(0, t) = rng.normal();
      f(0, t) = rng.normal();
      f(1, t) = rng.normal();
    }
    Matrix lambda = Matrix::Zero(1, 2);
    lambda(0, 1) = -0.45;
    const Vector s2 = Vector::Constant(1, 0.8);
    loading::SubjectView view;
    view.y.push_back(&y);
    view.f.push_back(&f);
    view.sigma2.push_back(&s2);
    const double tau2 = 0.9, pi = 0.4;
    const double p = loading::inclusion_probability(loading::column_stats(view, lambda, 0, 0), pi, tau2);
    auto lik = [&](double l) {
      double ll = 0.0;
      for (int t = 0; t < T; ++t) {
        const double r = y(0, t) - l * f(0, t) - lambda(0, 1) * f(1, t);
        ll += -0.5 * std::log(2 * kPi * 0.8) - r * r / 1.6;
      }
      return std::exp(ll);
    };
    const int n = 20001;
    const double lo = -15, hi = 15, w = (hi - lo) / (n - 1);
    double slab = 0.0;
    for (int i = 0; i < n; ++i) {
      const double l = lo + i * w;
      slab += ((i == 0 || i == n - 1) ? 0.5 : 1.0) * w * lik(l) * std::exp(-l * l / (2 * tau2)) /
              std::sqrt(2 * kPi * tau2);
    }
    const double oracle = pi * slab / (pi * slab + (1 - pi) * lik(0.0));
    detail << ", inclusion |diff|=" << std::abs(p - oracle);
    if (std::abs(p - oracle) > 1e-4) fails.push_back("inclusion");
  }
  {  // factor posterior against the covariance form
    Matrix L(7, 3);
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = rng.normal();
    Vector h(3), s2(7), y(7);
    for (int k = 0; k < 3; ++k) h[k] = 0.6 * rng.normal();
    for (int n = 0; n < 7; ++n) {
      s2[n] = 0.2 + rng.uniform();
      y[n] = rng.normal();
    }
    const auto post = loading::factor_posterior(L, h, s2, y);
    const Matrix Omega = h.array().exp().matrix().asDiagonal();
    const Matrix Sig = L * Omega * L.transpose() + Matrix(s2.asDiagonal());
    const Eigen::FullPivLU<Matrix> lu(Sig);
    const double err = std::max((post.mean - Omega * L.transpose() * lu.solve(y)).cwiseAbs().maxCoeff(),
                                (post.cov - (Omega - Omega * L.transpose() * lu.solve(L * Omega))).cwiseAbs().maxCoeff());
    detail << ", factor max err=" << err;
    if (err > 1e-10) fails.push_back("factor");
  }
  {  // single-site log-volatility against quadrature
    const sv::SvParams p{0.2, 0.9, 0.2};
    std::vector<double> h{0.1, -0.3, 0.5};
    const std::vector<double> f{0.8, 1.9, -0.4};
    sv::SvTuning tuning;
    tuning.h_step = 1.0;
    std::vector<double> v;
    for (int i = 0; i < 2 * draws; ++i) {
      sv::update_h_site(f, h, 1, p, tuning, rng);
      if (i % 2 == 0) v.push_back(h[1]);
    }
    auto logd = [&](double x) {
      const double m1 = p.mu + p.phi * (h[0] - p.mu), m2 = p.mu + p.phi * (x - p.mu);
      return -(x - m1) * (x - m1) / (2 * p.delta2) - (h[2] - m2) * (h[2] - m2) / (2 * p.delta2) - 0.5 * x -
             0.5 * f[1] * f[1] * std::exp(-x);
    };
    const double lo = -4, hi = 5;
    const int bins = 60;
    const double w = (hi - lo) / bins;
    std::vector<double> pb(bins), qb(bins, 0.0);
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double a = lo + b * w;
      pb[b] = (std::exp(logd(a)) + 4 * std::exp(logd(a + w / 2)) + std::exp(logd(a + w))) * w / 6;
      total += pb[b];
    }
    for (double x : v) {
      const int b = static_cast<int>(std::floor((x - lo) / w));
      if (b >= 0 && b < bins) qb[b] += 1.0;
    }
    double tv = 0.0, outside = 1.0;
    for (int b = 0; b < bins; ++b) {
      tv += std::abs(pb[b] / total - qb[b] / v.size());
      outside -= qb[b] / v.size();
    }
    tv = 0.5 * (tv + outside);
    detail << ", h site TV=" << fixed(tv, 4);
    if (tv >= 0.05) fails.push_back("h site");
  }
  std::string failed;
  for (const auto& f : fails) failed += " " + f;
  return {fails.empty(), detail.str() + (failed.empty() ? "" : "; failed:" + failed)};
}

// ---- 5: KS statistics ----

Outcome criterion5() {
  using behavior::ks_statistic;
  const std::vector<double> a{1, 2, 3, 4}, b{3, 4, 5, 6}, c{10, 11};
  const bool examples = ks_statistic(a, a) == 0.0 && ks_statistic(a, b) == 0.5 && ks_statistic(a, c) == 1.0;
  Rng rng(55);
  int violations = 0;
  const int triples = 10000;
  for (int i = 0; i < triples; ++i) {
    std::vector<std::vector<double>> s(3);
    for (auto& v : s) {
      const int n = 1 + static_cast<int>(rng.uniform() * 30);
      const double shift = rng.normal();
      for (int j = 0; j < n; ++j) v.push_back(std::round(4.0 * (shift + rng.normal())) / 4.0);
    }
    const double xy = ks_statistic(s[0], s[1]), yx = ks_statistic(s[1], s[0]);
    const double yz = ks_statistic(s[1], s[2]), xz = ks_statistic(s[0], s[2]);
    if (xy != yx || xz > xy + yz + 1e-12 || xy < 0.0 || xy > 1.0) ++violations;
  }
  return {examples && violations == 0, std::string("examples ") + (examples ? "match" : "differ") + ", " +
                                           std::to_string(violations) +
                  " violations in " + std::to_string(triples) + " triples"};
}

// ---- 6: AIC over K ----

Outcome criterion6() {
  const std::vector<int> ks{2, 3, 4, 5};
  const long sweeps = g_quick ? 1000 : 4000;
  int passed = 0;
  std::string detail;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto sc = simulate::small_scale_scenario(300, seed);
    const auto sim = simulate::gen_dataset(sc);
    Dataset data = sim.data;
    ingest::standardize(data);
    std::vector<double> aic;
    for (int k : ks) {
      const auto r = sampler::run_chain(data, k, fit_config(data, sweeps, sweeps / 2, seed, false));
      aic.push_back(sampler::score_chain(data, r.draws, r.h_mean).aic);
    }
    const double drop = aic[0] - aic[1];
    const bool flat = aic[2] >= aic[1] - 0.1 * drop && aic[3] >= aic[1] - 0.1 * drop;
    const bool ok = drop > 0.0 && flat;
    passed += ok;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + " AIC";
    for (double v : aic) detail += " " + fixed(v, 1);
  }
  return {passed == 3, std::to_string(passed) + "/3 seeds; " + detail};
}

// ---- 7: planted behavioral signal ----

Outcome criterion7() {
  const int S = 40, K = 5, planted = 1;
  int exact = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(1000 + seed);
    Matrix delta(S, K);
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = 2.0 * rng.uniform() - 1.0;
    Vector signal = delta.col(planted);
    const double signal_var = stats::variance(std::vector<double>(signal.data(), signal.data() + S));
    const double noise_sd = std::sqrt(signal_var / 3.0);
    Vector z = signal;
    for (int s = 0; s < S; ++s) z[s] += noise_sd * rng.normal();
    const Vector zc = behavior::center(z);
    const Matrix dc = behavior::center_columns(delta);
    RegressionState st = behavior::initial_regression_state(K);
    const behavior::RegressionPriors pr{};
    std::vector<std::vector<double>> beta(K);
    for (int it = 1; it <= 6000; ++it) {
      st = behavior::regression_gibbs_sweep(zc, dc, st, pr, rng);
      if (it > 1000)
        for (int k = 0; k < K; ++k) beta[k].push_back(st.beta[k]);
    }
    const auto assoc = behavior::summarize_associations(beta, 0.95);
    bool ok = true;
    for (int k = 0; k < K; ++k) ok = ok && assoc[k].associated == (k == planted);
    exact += ok;
  }
  return {exact >= 9, std::to_string(exact) + "/10 seeds flag exactly the planted ICN"};
}

// ---- 8: determinism and alignment ----

Outcome criterion8() {
  const auto sc = simulate::small_scale_scenario(120, 8);
  const auto sim = simulate::gen_dataset(sc);
  auto cfg = fit_config(sim.data, 200, 100, 8, false);
  const auto a = sampler::run_chain(sim.data, 3, cfg);
  const auto b = sampler::run_chain(sim.data, 3, cfg);
  cfg.threads = 4;
  const auto c = sampler::run_chain(sim.data, 3, cfg);
  bool repeat = true, threads = true;
  for (const auto& [name, series] : a.draws.series) {
    repeat = repeat && series.values() == b.draws.at(name).values();
    threads = threads && series.values() == c.draws.at(name).values();
  }
  ChainState st = a.final_state;
  const double before = posthoc::state_loglik(st, sim.data).value;
  auto plans = sampler::plans_for(st.lambda, a.reference);
  plans.front() = {{2, 0, 1}, {-1, 1, -1}};
  posthoc::align_state(st, plans, true);
  const double rel = std::abs(posthoc::state_loglik(st, sim.data).value - before) / std::abs(before);
  const bool ok = repeat && threads && rel <= 1e-10;
  return {ok, std::string("repeat ") + (repeat ? "identical" : "differs") + ", 1 vs 4 threads " +
                  (threads ? "identical" : "differs") + ", alignment relative log-likelihood change " +
                  [&] {
                    std::ostringstream s;
                    s << rel;
                    return s.str();
                  }()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_flag("--quick", g_quick, "shorter runs for development");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--geweke-samples", g_geweke_samples, "samples per Geweke test");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8};
  const std::set<int> chosen(only.begin(), only.end());
  int failures = 0;
  for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) {
    if (!chosen.empty() && !chosen.count(i)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << "criterion " << i << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fixed(secs, 1) << " s) "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
