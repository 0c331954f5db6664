#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/rng.hpp"

#include <span>

namespace bicnet::sv {

// AR(1) log-volatility: h_1 ~ N(mu, delta2/(1-phi^2)), h_t | h_{t-1} ~ N(mu + phi(h_{t-1}-mu), delta2).
struct SvParams {
  double mu = 0.0;
  double phi = 0.0;
  double delta2 = 1.0;

  bool valid() const { return std::abs(phi) < 1.0 && delta2 > 0.0; }
};

struct SvPriors {
  double b_mu = 0.0;
  double B_mu = 1.0;
  double a_phi = 20.0;
  double b_phi = 2.5;
  double B_delta = 0.5;  // delta2 ~ Gamma(1/2, rate 1/(2 B_delta))

  static SvPriors from(const Hyperparameters& hyper) {
    return {hyper.b_mu, hyper.B_mu, hyper.a_phi, hyper.b_phi, hyper.B_delta};
  }
};

inline constexpr double kTargetAcceptance = 0.44;
// Proposals putting any |h_t| beyond this are rejected and counted.
inline constexpr double kLogVolatilityBound = 40.0;

struct AcceptCounter {
  long proposed = 0;
  long accepted = 0;

  void record(bool ok) {
    ++proposed;
    accepted += ok ? 1 : 0;
  }
  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

// Random-walk scales and acceptance bookkeeping for one (k, s, g) block.
struct SvTuning {
  double h_step = 1.0;
  double delta_step = 0.5;     // on log delta2
  double nc_delta_step = 0.3;  // on log delta, non-centered move

  AcceptCounter h, phi, delta, nc_mu, nc_delta;
  AcceptCounter h_window, delta_window, nc_delta_window;
  long guard_rejections = 0;
  long adapt_calls = 0;

  // Robbins-Monro step on each log scale toward kTargetAcceptance using the
  // acceptance since the previous call. Only called during burn-in.
  void adapt();
};

// Gaussian conditional of h_t given its neighbours under the AR(1) prior.
struct SiteMoments {
  double mean;
  double var;
};
SiteMoments site_prior(std::span<const double> h, std::size_t t, const SvParams& p);

// log N(h; prior) + log N(f; 0, e^h), up to a constant.
double site_log_target(double h, double f, SiteMoments prior);

void update_h_site(std::span<const double> f, std::span<double> h, std::size_t t, const SvParams& p, SvTuning& tuning,
                   Rng& rng);

// Forward sweep of single-site random-walk MH over all t.
void update_h_path(std::span<const double> f, std::span<double> h, const SvParams& p, SvTuning& tuning, Rng& rng);

// log p(h | mu, phi, delta2), stationary start included.
double ar1_log_density(std::span<const double> h, const SvParams& p);

struct SvUpdateOptions {
  bool use_likelihood = true;  // false samples the prior (reproduction checks)
  bool mu = true;
  bool phi = true;
  bool delta = true;
};

// Centered parameterization: mu by its Gaussian conditional, phi by an
// independence MH proposal from the flat-prior AR regression, delta2 by
// random-walk MH on log delta2.
SvParams update_sv_params(std::span<const double> h, SvParams p, const SvPriors& priors, SvTuning& tuning, Rng& rng,
                          SvUpdateOptions options = {});

struct AsisOptions {
  bool mu = true;
  bool delta = true;
};

// Non-centered target for (mu, delta) given htilde = (h - mu)/delta and f:
// N(mu; b, B) * halfnormal(delta; B_delta) * prod N(f_t; 0, exp(mu + delta htilde_t)).
double nc_log_target(double mu, double delta, std::span<const double> htilde, std::span<const double> f,
                     const SvPriors& priors);

// MH log acceptance of the non-centered mu move. The proposal
// exp(-mu) ~ Gamma(T/2, sum f^2 exp(-delta htilde)/2) matches the likelihood
// exactly, so only the prior ratio remains.
double asis_mu_log_accept(double mu_from, double mu_to, const SvPriors& priors);

// MH log acceptance of the random walk on log delta (Jacobian included).
double asis_delta_log_accept(double delta_from, double delta_to, double mu, std::span<const double> htilde,
                             std::span<const double> f, const SvPriors& priors);

// Ancillarity-sufficiency interweaving: redraw (mu, delta) holding htilde fixed,
// then map h back. h is left bit-identical when every proposal is rejected.
SvParams interweave_asis(std::span<double> h, SvParams p, std::span<const double> f, const SvPriors& priors,
                         SvTuning& tuning, Rng& rng, AsisOptions options = {});

// One full block update: h path, centered parameters, interweaving.
SvParams sv_sweep(std::span<const double> f, std::span<double> h, SvParams p, const SvPriors& priors, SvTuning& tuning,
                  Rng& rng);

}  // namespace bicnet::sv
