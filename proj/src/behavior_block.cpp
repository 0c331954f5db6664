#include "bicnet/behavior_block.hpp"

#include "bicnet/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bicnet::behavior {

namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

[[noreturn]] void report_collinear(const Matrix& delta, const std::vector<int>& active) {
  int best_i = active.front(), best_j = active.size() > 1 ? active[1] : active.front();
  double best = -1.0;
  for (std::size_t i = 0; i < active.size(); ++i)
    for (std::size_t j = i + 1; j < active.size(); ++j) {
      const auto a = delta.col(active[i]), b = delta.col(active[j]);
      const double denom = a.norm() * b.norm();
      const double c = denom > 0.0 ? std::abs(a.dot(b)) / denom : 1.0;
      if (c > best) {
        best = c;
        best_i = active[i];
        best_j = active[j];
      }
    }
  std::ostringstream os;
  os << "singular coefficient posterior: collinear task-effect columns " << best_i << " and " << best_j;
  throw NumericalError(os.str());
}

}  // namespace

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("KS statistic needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double m = static_cast<double>(x.size()), n = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  return d;
}

double ks_critical_value(double alpha, std::size_t m, std::size_t n) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  return c * std::sqrt((dm + dn) / (dm * dn));
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::excited: return "excited";
    case Activation::inhibited: return "inhibited";
    default: return "none";
  }
}

TaskEffect compute_task_effects(const SubjectFactorDraws& rest, const SubjectFactorDraws& task,
                                const ThresholdPolicy& policy) {
  if (rest.empty() || rest.front().empty() || rest.front().front().empty())
    throw ValidationError("task effects require rest");
  if (task.size() != rest.size()) throw ValidationError("task and rest draws cover different subjects");
  const auto S = rest.size(), K = rest.front().size();
  TaskEffect out;
  out.delta.resize(S, K);
  out.sign.resize(S, K);
  out.threshold.resize(S, K);
  out.label.assign(S, std::vector<Activation>(K, Activation::none));
  for (std::size_t s = 0; s < S; ++s) {
    if (rest[s].size() != K || task[s].size() != K) throw ValidationError("factor count differs between conditions");
    for (std::size_t k = 0; k < K; ++k) {
      const auto& r = rest[s][k];
      const auto& t = task[s][k];
      if (r.empty()) throw ValidationError("task effects require rest");
      if (t.empty()) throw ValidationError("empty task draws");
      const double d = ks_statistic(t, r);
      const double diff = stats::mean(t) - stats::mean(r);
      const int sign = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
      const double thr = policy.fixed ? policy.value : ks_critical_value(policy.alpha, t.size(), r.size());
      out.delta(s, k) = d;
      out.sign(s, k) = sign;
      out.threshold(s, k) = thr;
      if (d >= thr && sign != 0) out.label[s][k] = sign > 0 ? Activation::excited : Activation::inhibited;
    }
  }
  return out;
}

RegressionState initial_regression_state(int K) {
  RegressionState st;
  st.beta = Vector::Zero(K);
  st.pi = IndicatorVector::Zero(K);
  return st;
}

double inclusion_conditional(const Vector& z, const Matrix& delta, const RegressionState& st, int k) {
  const Vector r = z - delta * st.beta + delta.col(k) * st.beta[k];
  const double zeta = delta.col(k).squaredNorm() + 1.0 / st.tau2;
  const double dr = delta.col(k).dot(r);
  const double log_bf = -0.5 * std::log(zeta * st.tau2) + dr * dr / (2.0 * st.sigma2 * zeta);
  return logistic(std::log(st.theta) - std::log1p(-st.theta) + log_bf);
}

RegressionState regression_gibbs_sweep(const Vector& z, const Matrix& delta, RegressionState st,
                                       const RegressionPriors& pr, Rng& rng) {
  const int S = static_cast<int>(z.size());
  const int K = static_cast<int>(delta.cols());
  if (delta.rows() != S) throw ValidationError("task-effect rows must equal subject count");
  if (!delta.allFinite() || !z.allFinite()) throw ValidationError("non-finite regression input");

  const double active = static_cast<double>(st.pi.cast<int>().sum());
  st.theta = rng.beta(pr.a + active, pr.b + (K - active));
  st.theta = std::clamp(st.theta, 1e-15, 1.0 - 1e-15);

  const double bb = st.beta.squaredNorm();
  st.tau2 = rng.inv_gamma(0.5 + 0.5 * active, 0.5 * pr.S2 + bb / (2.0 * st.sigma2));

  // beta_k | sigma2 ~ N(0, sigma2 tau2) also informs sigma2.
  const double rss = (z - delta * st.beta).squaredNorm();
  st.sigma2 = rng.inv_gamma(pr.alpha1 + 0.5 * S + 0.5 * active, pr.alpha2 + 0.5 * rss + bb / (2.0 * st.tau2));

  std::vector<int> idx;
  for (int k = 0; k < K; ++k)
    if (st.pi[k]) idx.push_back(k);
  st.beta.setZero();
  if (!idx.empty()) {
    const int A = static_cast<int>(idx.size());
    Matrix D(S, A);
    for (int j = 0; j < A; ++j) D.col(j) = delta.col(idx[j]);
    Matrix Q = D.transpose() * D;
    Q.diagonal().array() += 1.0 / st.tau2;
    Q /= st.sigma2;
    Eigen::LLT<Matrix> llt(Q);
    if (llt.info() != Eigen::Success || !Q.allFinite()) report_collinear(delta, idx);
    const Vector L = llt.matrixL().toDenseMatrix().diagonal();
    if (L.minCoeff() <= 1e-12 * L.maxCoeff()) report_collinear(delta, idx);
    Vector eps(A);
    for (int j = 0; j < A; ++j) eps[j] = rng.normal();
    const Vector b = llt.solve(D.transpose() * z / st.sigma2) + llt.matrixU().solve(eps);
    for (int j = 0; j < A; ++j) st.beta[idx[j]] = b[j];
  }

  for (int k = 0; k < K; ++k) {
    const double p = inclusion_conditional(z, delta, st, k);
    if (rng.uniform() < p) {
      const Vector r = z - delta * st.beta + delta.col(k) * st.beta[k];
      const double zeta = delta.col(k).squaredNorm() + 1.0 / st.tau2;
      st.pi[k] = 1;
      st.beta[k] = delta.col(k).dot(r) / zeta + std::sqrt(st.sigma2 / zeta) * rng.normal();
    } else {
      st.pi[k] = 0;
      st.beta[k] = 0.0;
    }
  }
  return st;
}

std::vector<Association> summarize_associations(const std::vector<std::vector<double>>& beta_draws, double level) {
  std::vector<Association> out;
  const double tail = 0.5 * (1.0 - level);
  for (const auto& draws : beta_draws) {
    if (draws.size() < 100) throw ValidationError("at least 100 stored draws required for credible intervals");
    std::vector<double> sorted(draws);
    std::sort(sorted.begin(), sorted.end());
    const double lo = stats::quantile_sorted(sorted, tail);
    const double hi = stats::quantile_sorted(sorted, 1.0 - tail);
    out.push_back({lo, hi, lo > 0.0 || hi < 0.0});
  }
  return out;
}

OlsReport ols_report(const Vector& z, const Matrix& delta) {
  const auto S = z.size(), K = delta.cols();
  if (S <= K + 1) throw ValidationError("least-squares report needs more subjects than regressors plus one");
  Matrix X(S, K + 1);
  X.col(0).setOnes();
  X.rightCols(K) = delta;
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < K + 1) throw NumericalError("task-effect design is rank deficient");
  const Vector coef = qr.solve(z);
  const Vector resid = z - X * coef;
  const int df = static_cast<int>(S - K - 1);
  const double s2 = resid.squaredNorm() / df;
  const Matrix XtX_inv = (X.transpose() * X).inverse();
  OlsReport rep;
  rep.df = df;
  rep.intercept = coef[0];
  rep.coefficient = coef.tail(K);
  rep.std_error.resize(K);
  rep.p_value.resize(K);
  boost::math::students_t dist(df);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double se = std::sqrt(s2 * XtX_inv(k + 1, k + 1));
    rep.std_error[k] = se;
    if (se > 0.0) {
      const double t = std::abs(coef[k + 1]) / se;
      rep.p_value[k] = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    } else {
      rep.p_value[k] = coef[k + 1] == 0.0 ? 1.0 : 0.0;
    }
  }
  return rep;
}

Vector center(const Vector& v) { return v.array() - v.mean(); }

Matrix center_columns(const Matrix& m) { return m.rowwise() - m.colwise().mean(); }

}  // namespace bicnet::behavior
