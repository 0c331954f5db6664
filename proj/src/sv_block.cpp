#include "bicnet/sv_block.hpp"

#include <algorithm>
#include <cmath>

namespace bicnet::sv {

namespace {

constexpr double kMinStep = 1e-3;
constexpr double kMaxStep = 20.0;

double adapt_scale(double step, AcceptCounter& window, long calls) {
  if (window.proposed == 0) return step;
  const double gain = 1.0 / std::sqrt(static_cast<double>(calls) + 1.0);
  step *= std::exp(gain * (window.rate() - kTargetAcceptance));
  window = {};
  return std::clamp(step, kMinStep, kMaxStep);
}

double log_beta_prior_phi(double phi, const SvPriors& pr) {
  return (pr.a_phi - 1.0) * std::log1p(phi) + (pr.b_phi - 1.0) * std::log1p(-phi);
}

// Centered AR(1) residual sum of squares, stationary term included.
double ar1_sum_squares(std::span<const double> h, double mu, double phi) {
  double x_prev = h[0] - mu;
  double ss = (1.0 - phi * phi) * x_prev * x_prev;
  for (std::size_t t = 1; t < h.size(); ++t) {
    const double x = h[t] - mu;
    const double e = x - phi * x_prev;
    ss += e * e;
    x_prev = x;
  }
  return ss;
}

double phi_log_target(double phi, std::span<const double> h, double mu, double delta2, const SvPriors& pr,
                      bool use_likelihood) {
  double lt = log_beta_prior_phi(phi, pr);
  if (use_likelihood)
    lt += 0.5 * std::log1p(-phi * phi) - ar1_sum_squares(h, mu, phi) / (2.0 * delta2);
  return lt;
}

double delta2_log_target(double log_delta2, double ss, double T, const SvPriors& pr, bool use_likelihood) {
  const double d2 = std::exp(log_delta2);
  // Gamma(1/2, 1/(2B)) density in delta2 times the Jacobian of log delta2.
  double lt = 0.5 * log_delta2 - d2 / (2.0 * pr.B_delta);
  if (use_likelihood) lt += -0.5 * T * log_delta2 - ss / (2.0 * d2);
  return lt;
}

bool within_bound(double mu, double delta, std::span<const double> htilde) {
  for (double x : htilde)
    if (std::abs(mu + delta * x) > kLogVolatilityBound) return false;
  return true;
}

}  // namespace

void SvTuning::adapt() {
  ++adapt_calls;
  h_step = adapt_scale(h_step, h_window, adapt_calls);
  delta_step = adapt_scale(delta_step, delta_window, adapt_calls);
  nc_delta_step = adapt_scale(nc_delta_step, nc_delta_window, adapt_calls);
}

SiteMoments site_prior(std::span<const double> h, std::size_t t, const SvParams& p) {
  const std::size_t T = h.size();
  const double mu = p.mu, phi = p.phi, d2 = p.delta2;
  if (T == 1) return {mu, d2 / (1.0 - phi * phi)};
  if (t == 0) return {mu + phi * (h[1] - mu), d2};
  if (t == T - 1) return {mu + phi * (h[T - 2] - mu), d2};
  const double denom = 1.0 + phi * phi;
  return {mu + phi * ((h[t - 1] - mu) + (h[t + 1] - mu)) / denom, d2 / denom};
}

double site_log_target(double h, double f, SiteMoments prior) {
  const double d = h - prior.mean;
  return -d * d / (2.0 * prior.var) - 0.5 * h - 0.5 * f * f * std::exp(-h);
}

void update_h_site(std::span<const double> f, std::span<double> h, std::size_t t, const SvParams& p,
                   SvTuning& tuning, Rng& rng) {
  const SiteMoments prior = site_prior(h, t, p);
  const double current = h[t];
  const double proposal = current + tuning.h_step * rng.normal();
  bool accept = false;
  if (std::abs(proposal) > kLogVolatilityBound) {
    ++tuning.guard_rejections;
  } else {
    const double log_ratio = site_log_target(proposal, f[t], prior) - site_log_target(current, f[t], prior);
    accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
  }
  if (accept) h[t] = proposal;
  tuning.h.record(accept);
  tuning.h_window.record(accept);
}

void update_h_path(std::span<const double> f, std::span<double> h, const SvParams& p, SvTuning& tuning, Rng& rng) {
  for (std::size_t t = 0; t < h.size(); ++t) update_h_site(f, h, t, p, tuning, rng);
}

double ar1_log_density(std::span<const double> h, const SvParams& p) {
  constexpr double kLog2Pi = 1.8378770664093453;
  const double T = static_cast<double>(h.size());
  return -0.5 * T * (kLog2Pi + std::log(p.delta2)) + 0.5 * std::log1p(-p.phi * p.phi) -
         ar1_sum_squares(h, p.mu, p.phi) / (2.0 * p.delta2);
}

SvParams update_sv_params(std::span<const double> h, SvParams p, const SvPriors& pr, SvTuning& tuning, Rng& rng,
                          SvUpdateOptions opt) {
  const std::size_t T = h.size();
  const bool lik = opt.use_likelihood;

  if (opt.mu) {
    double precision = 1.0 / pr.B_mu;
    double shift = pr.b_mu / pr.B_mu;
    if (lik) {
      const double phi = p.phi;
      double acc = (1.0 - phi * phi) * h[0];
      for (std::size_t t = 1; t < T; ++t) acc += (1.0 - phi) * (h[t] - phi * h[t - 1]);
      precision += ((1.0 - phi * phi) + static_cast<double>(T - 1) * (1.0 - phi) * (1.0 - phi)) / p.delta2;
      shift += acc / p.delta2;
    }
    p.mu = shift / precision + rng.normal() / std::sqrt(precision);
  }

  if (opt.phi && T >= 2) {
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 1; t < T; ++t) {
      const double x = h[t - 1] - p.mu;
      sxx += x * x;
      sxy += x * (h[t] - p.mu);
    }
    if (sxx > 0.0 && std::isfinite(sxx)) {
      const double m = sxy / sxx;
      const double v = p.delta2 / sxx;
      const double proposal = m + std::sqrt(v) * rng.normal();
      bool accept = false;
      if (std::abs(proposal) < 1.0) {
        auto log_q = [&](double x) { return -(x - m) * (x - m) / (2.0 * v); };
        const double log_ratio = (phi_log_target(proposal, h, p.mu, p.delta2, pr, lik) - log_q(proposal)) -
                                 (phi_log_target(p.phi, h, p.mu, p.delta2, pr, lik) - log_q(p.phi));
        accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
      }
      if (accept) p.phi = proposal;
      tuning.phi.record(accept);
    }
  }

  if (opt.delta) {
    const double ss = ar1_sum_squares(h, p.mu, p.phi);
    const double current = std::log(p.delta2);
    const double proposal = current + tuning.delta_step * rng.normal();
    const double log_ratio = delta2_log_target(proposal, ss, static_cast<double>(T), pr, lik) -
                             delta2_log_target(current, ss, static_cast<double>(T), pr, lik);
    const bool accept = std::isfinite(std::exp(proposal)) && std::exp(proposal) > 0.0 &&
                        (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio);
    if (accept) p.delta2 = std::exp(proposal);
    tuning.delta.record(accept);
    tuning.delta_window.record(accept);
  }
  return p;
}

double nc_log_target(double mu, double delta, std::span<const double> htilde, std::span<const double> f,
                     const SvPriors& pr) {
  double lt = -(mu - pr.b_mu) * (mu - pr.b_mu) / (2.0 * pr.B_mu) - delta * delta / (2.0 * pr.B_delta);
  for (std::size_t t = 0; t < f.size(); ++t) {
    const double h = mu + delta * htilde[t];
    lt += -0.5 * h - 0.5 * f[t] * f[t] * std::exp(-h);
  }
  return lt;
}

double asis_mu_log_accept(double mu_from, double mu_to, const SvPriors& pr) {
  const double a = mu_from - pr.b_mu, b = mu_to - pr.b_mu;
  return (a * a - b * b) / (2.0 * pr.B_mu);
}

double asis_delta_log_accept(double delta_from, double delta_to, double mu, std::span<const double> htilde,
                             std::span<const double> f, const SvPriors& pr) {
  return (nc_log_target(mu, delta_to, htilde, f, pr) + std::log(delta_to)) -
         (nc_log_target(mu, delta_from, htilde, f, pr) + std::log(delta_from));
}

SvParams interweave_asis(std::span<double> h, SvParams p, std::span<const double> f, const SvPriors& pr,
                         SvTuning& tuning, Rng& rng, AsisOptions opt) {
  const std::size_t T = h.size();
  double mu = p.mu;
  double delta = std::sqrt(p.delta2);
  std::vector<double> htilde(T);
  for (std::size_t t = 0; t < T; ++t) htilde[t] = (h[t] - mu) / delta;
  bool moved = false;

  if (opt.mu) {
    double scale = 0.0;
    for (std::size_t t = 0; t < T; ++t) scale += f[t] * f[t] * std::exp(-delta * htilde[t]);
    bool accept = false;
    if (scale > 0.0 && std::isfinite(scale)) {
      const double u = rng.gamma(0.5 * static_cast<double>(T), 0.5 * scale);
      const double proposal = -std::log(u);
      if (!std::isfinite(proposal) || !within_bound(proposal, delta, htilde)) {
        ++tuning.guard_rejections;
      } else {
        const double log_ratio = asis_mu_log_accept(mu, proposal, pr);
        accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
        if (accept) mu = proposal;
      }
    }
    tuning.nc_mu.record(accept);
    moved = moved || accept;
  }

  if (opt.delta) {
    const double proposal = delta * std::exp(tuning.nc_delta_step * rng.normal());
    bool accept = false;
    if (!(proposal > 0.0) || !std::isfinite(proposal) || !within_bound(mu, proposal, htilde)) {
      ++tuning.guard_rejections;
    } else {
      const double log_ratio = asis_delta_log_accept(delta, proposal, mu, htilde, f, pr);
      accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
      if (accept) delta = proposal;
    }
    tuning.nc_delta.record(accept);
    tuning.nc_delta_window.record(accept);
    moved = moved || accept;
  }

  if (moved) {
    for (std::size_t t = 0; t < T; ++t) h[t] = mu + delta * htilde[t];
    p.mu = mu;
    p.delta2 = delta * delta;
  }
  return p;
}

SvParams sv_sweep(std::span<const double> f, std::span<double> h, SvParams p, const SvPriors& priors, SvTuning& tuning,
                  Rng& rng) {
  update_h_path(f, h, p, tuning, rng);
  p = update_sv_params(h, p, priors, tuning, rng);
  return interweave_asis(h, p, f, priors, tuning, rng);
}

}  // namespace bicnet::sv
