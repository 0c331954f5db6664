#include "bicnet/sampler.hpp"

#include "bicnet/baseline.hpp"
#include "bicnet/loading_block.hpp"
#include "bicnet/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace bicnet::sampler {

namespace {

using u64 = std::uint64_t;

Rng block_stream(const SamplerConfig& cfg, long sweep, StreamKind kind, u64 a = 0, u64 b = 0, u64 c = 0) {
  return Rng::stream(cfg.seed, {static_cast<u64>(StreamKind::chain), static_cast<u64>(cfg.chain),
                                static_cast<u64>(sweep), static_cast<u64>(kind), a, b, c});
}

std::vector<double> row_copy(const Matrix& m, Eigen::Index r) {
  std::vector<double> out(m.cols());
  for (Eigen::Index t = 0; t < m.cols(); ++t) out[t] = m(r, t);
  return out;
}

Matrix pooled_series(const Dataset& data, const std::vector<int>& subjects) {
  Eigen::Index total = 0;
  for (int s : subjects)
    for (int g = 0; g < data.conditions(); ++g) total += data.y[g][s].cols();
  Matrix out(data.regions(), total);
  Eigen::Index at = 0;
  for (int s : subjects)
    for (int g = 0; g < data.conditions(); ++g) {
      const Matrix& y = data.y[g][s];
      out.middleCols(at, y.cols()) = y;
      at += y.cols();
    }
  return out;
}

void check_finite(const ChainState& st) {
  for (std::size_t s = 0; s < st.lambda.size(); ++s)
    if (!st.lambda[s].allFinite()) throw NumericalError("non-finite loading in subject " + std::to_string(s));
  for (const auto& per_subject : st.cond)
    for (const ConditionState& c : per_subject) {
      if (!c.F.allFinite()) throw NumericalError("non-finite factor draw");
      if (!c.H.allFinite() || !c.mu.allFinite() || !c.phi.allFinite() || !c.delta2.allFinite())
        throw NumericalError("non-finite volatility state");
      if (!c.sigma2.allFinite() || (c.sigma2.array() <= 0.0).any())
        throw NumericalError("non-positive idiosyncratic variance");
    }
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(std::max(count, 0));
#pragma omp parallel for schedule(static) num_threads(std::max(threads, 1)) if (threads > 1)
  for (int i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

ChainState prior_start(const Dataset& data, int K, const SamplerConfig& cfg, Rng& rng) {
  const int N = data.regions(), S = data.subjects(), G = data.conditions();
  const Hyperparameters& hy = cfg.hyper;
  ChainState st;
  for (int s = 0; s < S; ++s) {
    Matrix L(N, K);
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = 0.1 * std::sqrt(hy.tau2_load) * rng.normal();
    st.lambda.push_back(L);
    st.z.push_back(IndicatorMatrix::Ones(N, K));
  }
  const double phi0 = 2.0 * hy.a_phi / (hy.a_phi + hy.b_phi) - 1.0;
  st.cond.assign(G, std::vector<ConditionState>(S));
  for (int g = 0; g < G; ++g)
    for (int s = 0; s < S; ++s) {
      ConditionState& c = st.cond[g][s];
      const auto T = data.y[g][s].cols();
      c.F.resize(K, T);
      for (Eigen::Index i = 0; i < c.F.size(); ++i) c.F.data()[i] = rng.normal();
      c.H = Matrix::Zero(K, T);
      c.sigma2 = Vector::Ones(N);
      c.mu = Vector::Zero(K);
      c.phi = Vector::Constant(K, phi0);
      c.delta2 = Vector::Constant(K, 0.1);
    }
  return st;
}

ChainState spectral_start(const Dataset& data, int K, const SamplerConfig& cfg, Rng& rng) {
  const int N = data.regions(), S = data.subjects(), G = data.conditions();
  ChainState st;
  std::vector<Matrix> base(S);
  if (cfg.single_subject) {
    for (int s = 0; s < S; ++s) base[s] = baseline::ica_loadings(pooled_series(data, {s}), K, rng);
  } else {
    std::vector<int> all(S);
    for (int s = 0; s < S; ++s) all[s] = s;
    const Matrix common = baseline::ica_loadings(pooled_series(data, all), K, rng);
    std::fill(base.begin(), base.end(), common);
  }
  for (int s = 0; s < S; ++s) {
    Matrix L = base[s];
    const double scale = std::sqrt(L.squaredNorm() / static_cast<double>(L.size()));
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] += 0.1 * scale * rng.normal();
    st.lambda.push_back(L);
    st.z.push_back(IndicatorMatrix::Ones(N, K));
  }

  st.cond.assign(G, std::vector<ConditionState>(S));
  for (int g = 0; g < G; ++g)
    for (int s = 0; s < S; ++s) {
      const Matrix& Y = data.y[g][s];
      const Matrix& L = st.lambda[s];
      ConditionState& c = st.cond[g][s];
      Matrix LtL = L.transpose() * L;
      LtL.diagonal().array() += 1e-6;
      c.F = LtL.ldlt().solve(L.transpose() * Y);
      const Matrix resid = Y - L * c.F;
      c.sigma2.resize(N);
      for (int n = 0; n < N; ++n) {
        const double row_var = (Y.row(n).array() - Y.row(n).mean()).square().mean();
        const double v = resid.row(n).squaredNorm() / static_cast<double>(Y.cols());
        c.sigma2[n] = std::max({v, 1e-2 * row_var, 1e-8});
      }
      c.H.resize(K, Y.cols());
      c.mu.resize(K);
      c.phi = Vector::Constant(K, 0.8);
      c.delta2 = Vector::Constant(K, 0.1);
      for (int k = 0; k < K; ++k) {
        const double v = c.F.row(k).squaredNorm() / static_cast<double>(Y.cols());
        c.mu[k] = std::log(std::max(v, 1e-6));
        c.H.row(k).setConstant(c.mu[k]);
      }
    }
  return st;
}

}  // namespace

ChainState initialize_chain(const Dataset& data, int K, const SamplerConfig& cfg) {
  const Dimensions d = data.dimensions(K);
  d.validate();
  const int N = d.N;
  Rng rng = block_stream(cfg, 0, StreamKind::init);
  ChainState st = cfg.init == InitMethod::prior ? prior_start(data, K, cfg, rng) : spectral_start(data, K, cfg, rng);
  st.pi0.resize(N, K);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) st.pi0(n, k) = std::clamp(cfg.hyper.prior_mean(n, k), 1e-15, 1.0 - 1e-15);
  return st;
}

void gibbs_sweep(ChainState& st, const Dataset& data, const SamplerConfig& cfg, ChainTuning& tuning, long sweep) {
  const int G = data.conditions(), S = data.subjects(), N = data.regions();
  const int K = static_cast<int>(st.lambda.front().cols());
  const Hyperparameters& hy = cfg.hyper;

  parallel_for(G * S, cfg.threads, [&](int i) {
    const int g = i / S, s = i % S;
    Rng rng = block_stream(cfg, sweep, StreamKind::sigma2, g, s);
    ConditionState& c = st.cond[g][s];
    for (int n = 0; n < N; ++n)
      c.sigma2[n] = loading::update_sigma2(data.y[g][s].row(n), st.lambda[s].row(n), c.F, hy.c_sigma, hy.d_sigma, rng);
  });

  const sv::SvPriors priors = sv::SvPriors::from(hy);
  parallel_for(G * S * K, cfg.threads, [&](int i) {
    const int k = i % K, s = (i / K) % S, g = i / (K * S);
    Rng rng = block_stream(cfg, sweep, StreamKind::sv, g, s, k);
    ConditionState& c = st.cond[g][s];
    const std::vector<double> f = row_copy(c.F, k);
    std::vector<double> h = row_copy(c.H, k);
    sv::SvParams p{c.mu[k], c.phi[k], c.delta2[k]};
    p = sv::sv_sweep(f, h, p, priors, tuning.sv[i], rng);
    for (std::size_t t = 0; t < h.size(); ++t) c.H(k, static_cast<Eigen::Index>(t)) = h[t];
    c.mu[k] = p.mu;
    c.phi[k] = p.phi;
    c.delta2[k] = p.delta2;
  });

  parallel_for(S, cfg.threads, [&](int s) {
    Rng rng = block_stream(cfg, sweep, StreamKind::loading, s);
    loading::SubjectView view;
    for (int g = 0; g < G; ++g) {
      view.y.push_back(&data.y[g][s]);
      view.f.push_back(&st.cond[g][s].F);
      view.sigma2.push_back(&st.cond[g][s].sigma2);
    }
    loading::update_subject_loadings(view, st.pi0, hy.tau2_load, st.lambda[s], st.z[s], rng);
  });

  parallel_for(G * S, cfg.threads, [&](int i) {
    const int g = i / S, s = i % S;
    Rng rng = block_stream(cfg, sweep, StreamKind::factor, g, s);
    ConditionState& c = st.cond[g][s];
    loading::update_factors(data.y[g][s], st.lambda[s], c.H, c.sigma2, c.F, rng);
  });

  // Moves along the scale ridge that the Gibbs blocks above traverse slowly.
  parallel_for(S * K, cfg.threads, [&](int i) {
    const int s = i / K, k = i % K;
    Rng rng = block_stream(cfg, sweep, StreamKind::scale, s, k);
    double sum_sq = 0.0;
    int nonzeros = 0;
    for (int n = 0; n < N; ++n)
      if (st.z[s](n, k)) {
        sum_sq += st.lambda[s](n, k) * st.lambda[s](n, k);
        ++nonzeros;
      }
    std::vector<double> mu(G);
    for (int g = 0; g < G; ++g) mu[g] = st.cond[g][s].mu[k];
    const double u = loading::draw_scale_shift(sum_sq, nonzeros, mu, hy.tau2_load, hy.b_mu, hy.B_mu, rng);
    st.lambda[s].col(k) *= std::exp(u);
    for (int g = 0; g < G; ++g) {
      ConditionState& c = st.cond[g][s];
      c.F.row(k) *= std::exp(-u);
      c.H.row(k).array() -= 2.0 * u;
      c.mu[k] -= 2.0 * u;
    }
  });

  // Column exchanges let the subjects agree on one labeling under the group map.
  if (!cfg.single_subject && K > 1)
    parallel_for(S, cfg.threads, [&](int s) {
      Rng rng = block_stream(cfg, sweep, StreamKind::label, s);
      for (int a = 0; a < K; ++a)
        for (int b = a + 1; b < K; ++b) {
          if (!(std::log(rng.uniform()) < loading::label_swap_log_ratio(st.z[s], st.pi0, a, b))) continue;
          st.lambda[s].col(a).swap(st.lambda[s].col(b));
          st.z[s].col(a).swap(st.z[s].col(b));
          for (int g = 0; g < G; ++g) {
            ConditionState& c = st.cond[g][s];
            c.F.row(a).swap(c.F.row(b));
            c.H.row(a).swap(c.H.row(b));
            std::swap(c.mu[a], c.mu[b]);
            std::swap(c.phi[a], c.phi[b]);
            std::swap(c.delta2[a], c.delta2[b]);
            const std::size_t base = (static_cast<std::size_t>(g) * S + s) * K;
            std::swap(tuning.sv[base + a], tuning.sv[base + b]);
          }
        }
    });

  if (!cfg.single_subject) {
    Rng rng = block_stream(cfg, sweep, StreamKind::group_inclusion);
    st.pi0 = loading::update_group_inclusion(st.z, N, K, hy, rng);
  }

  if (cfg.adapt && sweep <= cfg.policy.burn_in)
    for (auto& t : tuning.sv) t.adapt();
}

nlohmann::json state_to_json(const ChainState& st) {
  nlohmann::json doc;
  doc["lambda"] = nlohmann::json::array();
  doc["z"] = nlohmann::json::array();
  for (std::size_t s = 0; s < st.lambda.size(); ++s) {
    doc["lambda"].push_back(matrix_json(st.lambda[s]));
    doc["z"].push_back(matrix_json(st.z[s].cast<double>()));
  }
  doc["pi0"] = matrix_json(st.pi0);
  doc["conditions"] = nlohmann::json::array();
  for (const auto& per_subject : st.cond) {
    nlohmann::json subjects = nlohmann::json::array();
    for (const ConditionState& c : per_subject) {
      nlohmann::json e;
      e["mu"] = vector_json(c.mu);
      e["phi"] = vector_json(c.phi);
      e["delta2"] = vector_json(c.delta2);
      e["sigma2"] = vector_json(c.sigma2);
      e["h_min"] = c.H.size() ? c.H.minCoeff() : 0.0;
      e["h_max"] = c.H.size() ? c.H.maxCoeff() : 0.0;
      subjects.push_back(std::move(e));
    }
    doc["conditions"].push_back(std::move(subjects));
  }
  return doc;
}

std::vector<posthoc::AlignmentPlan> plans_for(const std::vector<Matrix>& lambda, const std::vector<Matrix>& reference) {
  std::vector<posthoc::AlignmentPlan> plans;
  for (std::size_t s = 0; s < lambda.size(); ++s) plans.push_back(posthoc::align_draws(lambda[s], reference[s]));
  return plans;
}

ChainResult run_chain(const Dataset& data, int K, const SamplerConfig& cfg, const std::function<void(long)>& progress) {
  cfg.policy.validate();
  const Dimensions d = data.dimensions(K);
  d.validate();
  cfg.hyper.validate(d);
  const int G = d.conditions(), S = d.S, N = d.N;
  const auto uG = static_cast<std::size_t>(G), uS = static_cast<std::size_t>(S), uN = static_cast<std::size_t>(N),
             uK = static_cast<std::size_t>(K);
  const bool group = !cfg.single_subject;

  ChainResult out;
  ChainState st = initialize_chain(data, K, cfg);
  ChainTuning tuning = ChainTuning::make(G, S, K);

  PosteriorDraws& draws = out.draws;
  draws.policy = cfg.policy;
  const auto kept = static_cast<std::size_t>(cfg.policy.stored_count());
  for (auto [name, shape] : std::vector<std::pair<std::string, std::vector<std::size_t>>>{
           {"lambda", {uS, uN, uK}},
           {"z", {uS, uN, uK}},
           {"pi0", {uN, uK}},
           {"mu", {uG, uS, uK}},
           {"phi", {uG, uS, uK}},
           {"delta2", {uG, uS, uK}},
           {"sigma2", {uG, uS, uN}},
           {"loglik", {1}}})
    draws.add(name, shape).reserve(kept);

  out.f_mean.assign(G, std::vector<Matrix>(S));
  out.h_mean.assign(G, std::vector<Matrix>(S));
  for (int g = 0; g < G; ++g)
    for (int s = 0; s < S; ++s) {
      out.f_mean[g][s] = Matrix::Zero(K, d.T[g]);
      out.h_mean[g][s] = Matrix::Zero(K, d.T[g]);
    }
  out.reference.assign(S, Matrix::Zero(N, K));
  long ref_count = 0;
  bool reference_fixed = false;
  long stored = 0;
  const long ref_start = cfg.policy.burn_in / 2;

  std::vector<double> buf;
  for (long sweep = 1; sweep <= cfg.policy.total; ++sweep) {
    try {
      gibbs_sweep(st, data, cfg, tuning, sweep);
      check_finite(st);
    } catch (const NumericalError& e) {
      nlohmann::json snap = state_to_json(st);
      snap["sweep"] = sweep;
      snap["chain"] = cfg.chain;
      snap["error"] = e.what();
      std::ostringstream os;
      os << "chain " << cfg.chain << " failed at sweep " << sweep << ": " << e.what();
      throw ChainFailure(os.str(), std::move(snap));
    }
    const posthoc::LogLik ll = posthoc::state_loglik(st, data);
    long nonzeros = 0;
    for (const auto& z : st.z) nonzeros += z.cast<long>().sum();
    out.trace_loglik.push_back(ll.value);
    out.trace_nonzeros.push_back(nonzeros);

    if (sweep > ref_start && sweep <= cfg.policy.burn_in) {
      // Running signed mean of Lambda, each draw first aligned to the current mean.
      std::vector<posthoc::AlignmentPlan> plans;
      if (ref_count > 0) {
        plans = plans_for(st.lambda, out.reference);
      } else {
        for (int s = 0; s < S; ++s) plans.push_back({posthoc::AlignmentPlan::identity(K).perm,
                                                     posthoc::sign_convention(st.lambda[s])});
      }
      ++ref_count;
      for (int s = 0; s < S; ++s)
        out.reference[s] += (posthoc::apply_columns(st.lambda[s], plans[s]) - out.reference[s]) /
                            static_cast<double>(ref_count);
    }

    if (cfg.policy.keeps(sweep)) {
      if (!reference_fixed) {
        for (int s = 0; s < S; ++s) {
          if (ref_count == 0) out.reference[s] = st.lambda[s];
          const auto sign = posthoc::sign_convention(out.reference[s]);
          for (int k = 0; k < K; ++k) out.reference[s].col(k) *= sign[k];
        }
        reference_fixed = true;
      }
      ChainState aligned = st;
      posthoc::align_state(aligned, plans_for(st.lambda, out.reference), group);
      ++stored;

      buf.clear();
      for (int s = 0; s < S; ++s)
        for (int n = 0; n < N; ++n)
          for (int k = 0; k < K; ++k) buf.push_back(aligned.lambda[s](n, k));
      draws.series["lambda"].push(buf, sweep);
      buf.clear();
      for (int s = 0; s < S; ++s)
        for (int n = 0; n < N; ++n)
          for (int k = 0; k < K; ++k) buf.push_back(aligned.z[s](n, k));
      draws.series["z"].push(buf, sweep);
      buf.clear();
      for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) buf.push_back(aligned.pi0(n, k));
      draws.series["pi0"].push(buf, sweep);
      for (const char* name : {"mu", "phi", "delta2", "sigma2"}) {
        buf.clear();
        const std::string key(name);
        for (int g = 0; g < G; ++g)
          for (int s = 0; s < S; ++s) {
            const ConditionState& c = aligned.cond[g][s];
            const Vector& v = key == "mu" ? c.mu : key == "phi" ? c.phi : key == "delta2" ? c.delta2 : c.sigma2;
            buf.insert(buf.end(), v.data(), v.data() + v.size());
          }
        draws.series[key].push(buf, sweep);
      }
      const double llv = ll.value;
      draws.series["loglik"].push(std::span<const double>(&llv, 1), sweep);

      for (int g = 0; g < G; ++g)
        for (int s = 0; s < S; ++s) {
          const ConditionState& c = aligned.cond[g][s];
          out.f_mean[g][s] += (c.F - out.f_mean[g][s]) / static_cast<double>(stored);
          const Vector scale = posthoc::loading_scale(aligned.lambda[s]);
          const Matrix h = c.H.colwise() + 2.0 * scale.array().log().matrix();
          out.h_mean[g][s] += (h - out.h_mean[g][s]) / static_cast<double>(stored);
        }
    }
    if (progress) progress(sweep);
  }

  sv::AcceptCounter h, phi, delta, nc_mu, nc_delta;
  long guard = 0;
  double h_step = 0.0;
  for (const auto& t : tuning.sv) {
    for (auto [dst, src] : {std::pair{&h, &t.h}, {&phi, &t.phi}, {&delta, &t.delta}, {&nc_mu, &t.nc_mu},
                            {&nc_delta, &t.nc_delta}}) {
      dst->proposed += src->proposed;
      dst->accepted += src->accepted;
    }
    guard += t.guard_rejections;
    h_step += t.h_step;
  }
  out.acceptance = {{"h", h.rate()},
                    {"phi", phi.rate()},
                    {"delta2", delta.rate()},
                    {"asis_mu", nc_mu.rate()},
                    {"asis_delta", nc_delta.rate()},
                    {"guard_rejections", guard},
                    {"mean_h_step", tuning.sv.empty() ? 0.0 : h_step / static_cast<double>(tuning.sv.size())}};
  out.final_state = std::move(st);
  return out;
}

std::vector<Matrix> unpack(std::span<const double> draw, std::size_t blocks, std::size_t rows, std::size_t cols) {
  if (draw.size() != blocks * rows * cols) throw ValidationError("draw size does not match the requested layout");
  std::vector<Matrix> out(blocks, Matrix(rows, cols));
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[b](i, j) = draw[(b * rows + i) * cols + j];
  return out;
}

std::vector<double> series_mean(const DrawSeries& series) {
  if (series.empty()) throw ValidationError("series '" + series.name() + "' has no draws");
  std::vector<double> mean(series.draw_size(), 0.0);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto d = series.draw(i);
    for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += d[e];
  }
  for (double& v : mean) v /= static_cast<double>(series.size());
  return mean;
}

void realign(PosteriorDraws& draws, const std::vector<Matrix>& reference, bool permute_pi0) {
  DrawSeries& lambda = draws.series.at("lambda");
  const auto& shape = lambda.shape();
  const std::size_t S = shape[0], N = shape[1], K = shape[2];
  const std::size_t G = draws.at("mu").shape()[0];
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const std::vector<Matrix> L = unpack(lambda.draw(i), S, N, K);
    const auto plans = plans_for(L, reference);
    auto permute_blocks = [&](DrawSeries& series, std::size_t blocks, std::size_t rows, bool signed_cols,
                              auto plan_of) {
      auto d = series.draw(i);
      std::vector<Matrix> m = unpack(d, blocks, rows, K);
      for (std::size_t b = 0; b < blocks; ++b) {
        const Matrix a = posthoc::apply_columns(m[b], plan_of(b), signed_cols);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < K; ++k) d[(b * rows + r) * K + k] = a(r, k);
      }
    };
    permute_blocks(lambda, S, N, true, [&](std::size_t s) { return plans[s]; });
    permute_blocks(draws.series.at("z"), S, N, false, [&](std::size_t s) { return plans[s]; });
    if (permute_pi0) {
      const auto majority = posthoc::majority_plan(plans);
      permute_blocks(draws.series.at("pi0"), 1, N, false, [&](std::size_t) { return majority; });
    }
    for (const char* name : {"mu", "phi", "delta2"})
      permute_blocks(draws.series.at(name), G * S, 1, false, [&](std::size_t b) { return plans[b % S]; });
  }
}

posthoc::ModelScores score_chain(const Dataset& data, const PosteriorDraws& draws,
                                 const std::vector<std::vector<Matrix>>& h_mean) {
  const auto& shape = draws.at("lambda").shape();
  const std::size_t S = shape[0], N = shape[1], K = shape[2];
  const std::size_t G = draws.at("sigma2").shape()[0];
  const DrawSeries& lambda = draws.at("lambda");
  std::vector<Matrix> lam(S, Matrix::Zero(N, K));
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const auto L = unpack(lambda.draw(i), S, N, K);
    for (std::size_t s = 0; s < S; ++s)
      lam[s] += L[s] * posthoc::loading_scale(L[s]).cwiseInverse().asDiagonal() / static_cast<double>(lambda.size());
  }
  const auto inc = unpack(series_mean(draws.at("z")), S, N, K);
  const auto sig = unpack(series_mean(draws.at("sigma2")), G * S, 1, N);
  posthoc::PlugIn plug;
  for (std::size_t s = 0; s < S; ++s) plug.lambda.push_back(posthoc::sparse_plug_in(lam[s], inc[s]));
  plug.sigma2.assign(G, std::vector<Vector>(S));
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t s = 0; s < S; ++s) plug.sigma2[g][s] = sig[g * S + s].row(0).transpose();
  plug.h = h_mean;
  return posthoc::model_selection_scores(draws.at("loglik").values(), plug, data);
}

}  // namespace bicnet::sampler
