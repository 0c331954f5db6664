#include "bicnet/posthoc.hpp"

#include "bicnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bicnet::posthoc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<double> column(const Matrix& m, Eigen::Index j) {
  std::vector<double> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m(i, j);
  return out;
}

// Greedy assignment on a score table: rows are targets, columns are sources.
std::vector<int> greedy_assign(const Matrix& score) {
  const auto K = score.rows();
  std::vector<int> target_of_source(K, -1), source_of_target(K, -1);
  for (Eigen::Index round = 0; round < K; ++round) {
    double best = -std::numeric_limits<double>::infinity();
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < K; ++i) {
      if (source_of_target[i] >= 0) continue;
      for (Eigen::Index j = 0; j < K; ++j) {
        if (target_of_source[j] >= 0) continue;
        if (score(i, j) > best || bi < 0) {
          best = score(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    source_of_target[bi] = static_cast<int>(bj);
    target_of_source[bj] = static_cast<int>(bi);
  }
  return source_of_target;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError(std::string(what) + ": shape mismatch");
}

}  // namespace

AlignmentPlan AlignmentPlan::identity(int K) {
  AlignmentPlan p;
  p.perm.resize(K);
  std::iota(p.perm.begin(), p.perm.end(), 0);
  p.sign.assign(K, 1);
  return p;
}

AlignmentPlan AlignmentPlan::inverse() const {
  AlignmentPlan inv;
  inv.perm.resize(perm.size());
  inv.sign.resize(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) {
    inv.perm[perm[j]] = static_cast<int>(j);
    inv.sign[perm[j]] = sign[j];
  }
  return inv;
}

bool AlignmentPlan::is_identity() const {
  for (std::size_t j = 0; j < perm.size(); ++j)
    if (perm[j] != static_cast<int>(j) || sign[j] != 1) return false;
  return true;
}

std::vector<int> match_columns(const Matrix& abs_draw, const Matrix& abs_reference) {
  if (abs_reference.cols() != abs_draw.cols() || abs_reference.rows() != abs_draw.rows())
    throw ValidationError("alignment reference must match the draw shape");
  const auto K = abs_reference.cols();
  Matrix score(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    const auto r = column(abs_reference, i);
    for (Eigen::Index j = 0; j < K; ++j) score(i, j) = stats::pearson(column(abs_draw, j), r);
  }
  return greedy_assign(score);
}

std::vector<int> sign_convention(const Matrix& lambda) {
  std::vector<int> sign(lambda.cols(), 1);
  for (Eigen::Index k = 0; k < lambda.cols(); ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index n = 1; n < lambda.rows(); ++n)
      if (std::abs(lambda(n, k)) > std::abs(lambda(best, k))) best = n;
    if (lambda.rows() > 0 && lambda(best, k) < 0.0) sign[k] = -1;
  }
  return sign;
}

AlignmentPlan align_draws(const Matrix& lambda, const Matrix& reference) {
  AlignmentPlan plan;
  plan.perm = match_columns(lambda.cwiseAbs(), reference.cwiseAbs());
  plan.sign.assign(lambda.cols(), 1);
  const Matrix moved = apply_columns(lambda, plan);
  plan.sign = sign_convention(moved);
  for (Eigen::Index k = 0; k < moved.cols(); ++k) {
    const double agree = moved.col(k).dot(reference.col(k));
    if (agree != 0.0) plan.sign[k] = agree > 0.0 ? 1 : -1;
  }
  return plan;
}

AlignmentPlan majority_plan(const std::vector<AlignmentPlan>& plans) {
  if (plans.empty()) throw ValidationError("majority plan needs at least one plan");
  std::size_t best = 0, best_count = 0;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto count = static_cast<std::size_t>(
        std::count_if(plans.begin(), plans.end(), [&](const AlignmentPlan& p) { return p.perm == plans[i].perm; }));
    if (count > best_count) {
      best = i;
      best_count = count;
    }
  }
  AlignmentPlan out;
  out.perm = plans[best].perm;
  out.sign.assign(out.perm.size(), 1);
  return out;
}

Matrix apply_columns(const Matrix& m, const AlignmentPlan& plan, bool with_sign) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    out.col(j) = (with_sign ? plan.sign[j] : 1) * m.col(plan.perm[j]);
  return out;
}

IndicatorMatrix apply_columns(const IndicatorMatrix& m, const AlignmentPlan& plan) {
  IndicatorMatrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.col(j) = m.col(plan.perm[j]);
  return out;
}

Matrix apply_rows(const Matrix& m, const AlignmentPlan& plan, bool with_sign) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    out.row(j) = (with_sign ? plan.sign[j] : 1) * m.row(plan.perm[j]);
  return out;
}

Vector apply_entries(const Vector& v, const AlignmentPlan& plan) {
  Vector out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) out[j] = v[plan.perm[j]];
  return out;
}

void align_state(ChainState& st, const std::vector<AlignmentPlan>& plans, bool permute_pi0) {
  if (plans.size() != st.lambda.size()) throw ValidationError("one alignment plan per subject required");
  for (std::size_t s = 0; s < plans.size(); ++s) {
    st.lambda[s] = apply_columns(st.lambda[s], plans[s]);
    st.z[s] = apply_columns(st.z[s], plans[s]);
    for (auto& per_subject : st.cond) {
      ConditionState& c = per_subject[s];
      c.F = apply_rows(c.F, plans[s], true);
      c.H = apply_rows(c.H, plans[s], false);
      c.mu = apply_entries(c.mu, plans[s]);
      c.phi = apply_entries(c.phi, plans[s]);
      c.delta2 = apply_entries(c.delta2, plans[s]);
    }
  }
  if (permute_pi0 && !plans.empty() && st.pi0.size() > 0) st.pi0 = apply_columns(st.pi0, majority_plan(plans), false);
}

Vector loading_scale(const Matrix& lambda) {
  Vector c = lambda.colwise().norm().transpose();
  for (Eigen::Index k = 0; k < c.size(); ++k)
    if (c[k] == 0.0) c[k] = 1.0;
  return c;
}

AlignmentPlan align_to_truth(const Matrix& estimate, const Matrix& truth) {
  check_same_shape(estimate, truth, "align_to_truth");
  const auto K = truth.cols();
  Matrix signed_corr(K, K), score(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j) {
      // Uncentered cosine: a column of zeros in either matrix scores 0.
      const double denom = truth.col(i).norm() * estimate.col(j).norm();
      signed_corr(i, j) = denom > 0.0 ? truth.col(i).dot(estimate.col(j)) / denom : 0.0;
      score(i, j) = std::abs(signed_corr(i, j));
    }
  AlignmentPlan plan;
  plan.perm = greedy_assign(score);
  plan.sign.resize(K);
  for (Eigen::Index i = 0; i < K; ++i) plan.sign[i] = signed_corr(i, plan.perm[i]) < 0.0 ? -1 : 1;
  return plan;
}

LogLik observed_loglik(const Matrix& y, const Matrix& lambda, const Matrix& h, const Vector& sigma2) {
  const auto N = lambda.rows(), K = lambda.cols(), T = y.cols();
  if (y.rows() != N || h.rows() != K || h.cols() != T || sigma2.size() != N)
    throw ValidationError("log-likelihood inputs are not conformable");
  const Vector ginv = sigma2.cwiseInverse();
  const double log_det_gamma = sigma2.array().log().sum();
  const Matrix GL = ginv.asDiagonal() * lambda;  // Gamma^-1 Lambda
  const Matrix LtGL = lambda.transpose() * GL;
  LogLik out;
  Matrix M(K, K);
  Eigen::LLT<Matrix> llt(K);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto yt = y.col(t);
    M = LtGL;
    double log_det_omega = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      M(k, k) += std::exp(-h(k, t));
      log_det_omega += h(k, t);
    }
    llt.compute(M);
    if (llt.info() != Eigen::Success) {
      ++out.skipped;
      continue;
    }
    const Vector u = GL.transpose() * yt;
    const Vector w = llt.matrixL().solve(u);
    const double quad = yt.cwiseProduct(ginv).dot(yt) - w.squaredNorm();
    double log_det_m = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) log_det_m += 2.0 * std::log(llt.matrixLLT()(k, k));
    const double log_det = log_det_gamma + log_det_omega + log_det_m;
    if (!std::isfinite(log_det) || !std::isfinite(quad)) {
      ++out.skipped;
      continue;
    }
    out.value += -0.5 * (static_cast<double>(N) * kLog2Pi + log_det + quad);
  }
  return out;
}

LogLik observed_loglik_dense(const Matrix& y, const Matrix& lambda, const Matrix& h, const Vector& sigma2) {
  const auto N = lambda.rows();
  LogLik out;
  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    const Matrix sigma = reconstruct_covariance(lambda, h.col(t).array().exp().matrix(), sigma2);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
      ++out.skipped;
      continue;
    }
    const Vector w = llt.matrixL().solve(y.col(t));
    double log_det = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) log_det += 2.0 * std::log(llt.matrixLLT()(n, n));
    out.value += -0.5 * (static_cast<double>(N) * kLog2Pi + log_det + w.squaredNorm());
  }
  return out;
}

LogLik state_loglik(const ChainState& st, const Dataset& data) {
  LogLik total;
  for (int g = 0; g < data.conditions(); ++g)
    for (int s = 0; s < data.subjects(); ++s) {
      const ConditionState& c = st.cond[g][s];
      const LogLik part = observed_loglik(data.y[g][s], st.lambda[s], c.H, c.sigma2);
      total.value += part.value;
      total.skipped += part.skipped;
    }
  return total;
}

EntrySummary posterior_summary(const DrawSeries& draws, Estimator estimator, double level) {
  if (draws.size() < 2) throw ValidationError("posterior summary needs at least 2 stored draws");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("credible level must lie in (0, 1)");
  const double tail = 0.5 * (1.0 - level);
  EntrySummary out;
  const std::size_t D = draws.draw_size();
  out.estimate.resize(D);
  out.lower.resize(D);
  out.upper.resize(D);
  for (std::size_t i = 0; i < D; ++i) {
    std::vector<double> v = draws.entry(i);
    std::sort(v.begin(), v.end());
    out.estimate[i] = estimator == Estimator::median ? stats::quantile_sorted(v, 0.5) : stats::mean(v);
    out.lower[i] = stats::quantile_sorted(v, tail);
    out.upper[i] = stats::quantile_sorted(v, 1.0 - tail);
  }
  return out;
}

GroupMap threshold_group_map(const Matrix& pi_hat, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
  GroupMap map;
  map.probability = pi_hat;
  map.included = (pi_hat.array() >= threshold).cast<std::uint8_t>();
  return map;
}

long parameter_count(std::span<const Matrix> lambda, int conditions) {
  long p = 0;
  for (const Matrix& l : lambda) {
    p += static_cast<long>((l.array() != 0.0).count());
    p += static_cast<long>(conditions) * (l.rows() + 3 * l.cols());
  }
  return p;
}

Matrix sparse_plug_in(const Matrix& mean_lambda, const Matrix& inclusion_frequency) {
  check_same_shape(mean_lambda, inclusion_frequency, "sparse_plug_in");
  return (inclusion_frequency.array() >= 0.5).select(mean_lambda, 0.0);
}

ModelScores model_selection_scores(std::span<const double> loglik_draws, const PlugIn& plug, const Dataset& data) {
  if (loglik_draws.empty()) throw ValidationError("model selection needs stored log-likelihood draws");
  const int G = data.conditions(), S = data.subjects();
  if (static_cast<int>(plug.lambda.size()) != S || static_cast<int>(plug.h.size()) != G ||
      static_cast<int>(plug.sigma2.size()) != G)
    throw ValidationError("plug-in estimate does not match the dataset");
  ModelScores sc;
  for (int g = 0; g < G; ++g)
    for (int s = 0; s < S; ++s) {
      const LogLik part = observed_loglik(data.y[g][s], plug.lambda[s], plug.h[g][s], plug.sigma2[g][s]);
      sc.loglik_hat += part.value;
      sc.skipped += part.skipped;
      sc.n += data.y[g][s].cols();
    }
  sc.params = parameter_count(plug.lambda, G);
  double mean_ll = 0.0;
  for (double v : loglik_draws) mean_ll += v;
  mean_ll /= static_cast<double>(loglik_draws.size());
  sc.mean_deviance = -2.0 * mean_ll;
  const double d_hat = -2.0 * sc.loglik_hat;
  sc.p_d = sc.mean_deviance - d_hat;
  sc.aic = d_hat + 2.0 * static_cast<double>(sc.params);
  sc.bic = d_hat + static_cast<double>(sc.params) * std::log(static_cast<double>(sc.n));
  sc.dic = 2.0 * sc.mean_deviance - d_hat;
  return sc;
}

int pick_elbow(const std::vector<int>& ks, const std::vector<double>& aic) {
  if (ks.empty() || ks.size() != aic.size()) throw ValidationError("one AIC value per K required");
  if (ks.size() == 1) return ks.front();
  const double lo = *std::min_element(aic.begin(), aic.end());
  const double sd = std::sqrt(stats::variance(aic));
  int best = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (aic[i] <= lo + sd) best = std::min(best, ks[i]);
  return best;
}

double mae(const Matrix& estimate, const Matrix& truth) {
  check_same_shape(estimate, truth, "mae");
  if (truth.size() == 0) throw ValidationError("mae: empty matrices");
  return (estimate - truth).cwiseAbs().sum() / static_cast<double>(truth.size());
}

double rmse_reconstruction(const Matrix& lambda_hat, const Matrix& f_hat, const Matrix& lambda, const Matrix& f) {
  if (lambda_hat.rows() != lambda.rows() || f_hat.cols() != f.cols() || lambda_hat.cols() != f_hat.rows() ||
      lambda.cols() != f.rows())
    throw ValidationError("rmse: shape mismatch");
  const Matrix err = lambda_hat * f_hat - lambda * f;
  return std::sqrt(err.squaredNorm() / static_cast<double>(f.cols()));
}

double jaccard(const RegionSet& a, const RegionSet& b) {
  std::size_t common = 0;
  for (int x : a) common += b.count(x);
  const std::size_t uni = a.size() + b.size() - common;
  return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

MapMatching match_maps(const std::vector<RegionSet>& a, const std::vector<RegionSet>& b) {
  if (a.size() != b.size()) throw ValidationError("map lists must have equal length");
  const auto K = static_cast<Eigen::Index>(a.size());
  MapMatching out;
  out.table.resize(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j) out.table(i, j) = jaccard(a[i], b[j]);
  out.mapping = greedy_assign(out.table);
  for (Eigen::Index i = 0; i < K; ++i) out.matched.push_back(out.table(i, out.mapping[i]));
  if (!out.matched.empty()) {
    out.mean = stats::mean(out.matched);
    out.sd = out.matched.size() > 1 ? std::sqrt(stats::variance(out.matched)) : 0.0;
  }
  return out;
}

double exhaustive_match_total(const Matrix& table) {
  const auto K = table.rows();
  if (K > 9) throw ValidationError("exhaustive matching limited to K <= 9");
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < K; ++i) total += table(i, perm[i]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<RegionSet> map_sets(const IndicatorMatrix& map) {
  std::vector<RegionSet> out(map.cols());
  for (Eigen::Index k = 0; k < map.cols(); ++k)
    for (Eigen::Index n = 0; n < map.rows(); ++n)
      if (map(n, k)) out[k].insert(static_cast<int>(n));
  return out;
}

CrossCorrelation lagged_crosscorr(std::span<const double> amplitude, std::span<const double> stimulus, int max_lag) {
  if (amplitude.size() != stimulus.size()) throw ValidationError("series lengths differ");
  const auto T = static_cast<int>(amplitude.size());
  if (max_lag < 1 || max_lag >= T) throw ValidationError("max lag must lie in [1, T)");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(amplitude) || constant(stimulus)) throw ValidationError("degenerate (constant) series");
  CrossCorrelation out;
  double best = -std::numeric_limits<double>::infinity();
  for (int lag = 1; lag <= max_lag; ++lag) {
    const auto n = static_cast<std::size_t>(T - lag);
    const double r = n >= 2 ? stats::pearson(amplitude.subspan(lag, n), stimulus.subspan(0, n)) : 0.0;
    out.curve.push_back(r);
    if (r > best) {
      best = r;
      out.best_lag = lag;
    }
  }
  return out;
}

}  // namespace bicnet::posthoc
