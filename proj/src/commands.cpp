#include "bicnet/commands.hpp"

#include "bicnet/behavior_block.hpp"
#include "bicnet/draw_store.hpp"
#include "bicnet/ingest.hpp"
#include "bicnet/posthoc.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bicnet::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v) { return ingest::format_double(v); }

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const ordered_json& doc) { open_text(path) << doc.dump(2) << '\n'; }

ordered_json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_matrix_csv(const fs::path& path, const Matrix& m) { ingest::write_csv_matrix(path, m); }

ordered_json decisions() {
  return ordered_json::array({
      "alignment reference: running signed mean of aligned Lambda over the second half of burn-in",
      "column matching: greedy on corr(|draw column|, |reference column|), ties to lower indices",
      "sign: agreement with the reference column; the reference's largest-magnitude loading is positive",
      "d_sigma default: 1 / pooled empirical variance of the fitted data",
      "BIC sample size: total time points over every fitted (condition, subject) series",
      "DIC: 2 * mean deviance - deviance at the posterior-mean plug-in",
      "plug-in loadings: posterior mean of unit-norm columns with inclusion frequency < 0.5 set to zero",
      "plug-in h: posterior mean on the unit-norm loading scale",
      "activation threshold default: asymptotic two-sample KS critical value at alpha = 0.05",
  });
}

struct LoadedStore {
  ordered_json metadata;
  store::StoredChain chain;  // chain 0, or all chains pooled
  int chains_used = 0;
};

void append_series(PosteriorDraws& into, const PosteriorDraws& from) {
  for (const auto& [name, series] : from.series) {
    DrawSeries& dst = into.series.at(name);
    for (std::size_t i = 0; i < series.size(); ++i) dst.push(series.draw(i), series.sweep_of(i));
  }
}

LoadedStore load_store(const fs::path& dir, bool pool) {
  if (!fs::exists(dir / "metadata.json")) throw ValidationError("empty store: no metadata.json in " + dir.string());
  LoadedStore ls;
  ls.metadata = read_json(dir / "metadata.json");
  const int chains = ls.metadata.value("chains", 0);
  if (chains < 1) throw ValidationError("empty store: no chains recorded");
  ls.chain = store::load_chain(dir / "chain_0");
  ls.chains_used = 1;
  if (ls.chain.draws.at("lambda").empty()) throw ValidationError("empty store: no stored draws");
  if (pool) {
    const bool group = !ls.metadata.value("single_subject", false);
    for (int c = 1; c < chains; ++c) {
      store::StoredChain other = store::load_chain(dir / ("chain_" + std::to_string(c)));
      sampler::realign(other.draws, ls.chain.reference, group);
      append_series(ls.chain.draws, other.draws);
      ++ls.chains_used;
    }
  }
  return ls;
}

std::vector<std::string> string_list(const ordered_json& j) { return j.get<std::vector<std::string>>(); }

behavior::SubjectFactorDraws mu_draws(const DrawSeries& mu, int g, int S, int K) {
  behavior::SubjectFactorDraws out(S, std::vector<std::vector<double>>(K));
  for (int s = 0; s < S; ++s)
    for (int k = 0; k < K; ++k) out[s][k] = mu.entry(static_cast<std::size_t>((g * S + s) * K + k));
  return out;
}

void write_task_effects(const behavior::TaskEffect& te, const std::string& condition,
                        const std::vector<std::string>& subjects, std::ostream& out) {
  for (Eigen::Index s = 0; s < te.delta.rows(); ++s)
    for (Eigen::Index k = 0; k < te.delta.cols(); ++k)
      out << condition << ',' << subjects[s] << ',' << (k + 1) << ',' << fmt(te.delta(s, k)) << ','
          << te.sign(s, k) << ',' << behavior::to_string(te.label[s][k]) << ',' << fmt(te.threshold(s, k)) << '\n';
}

// ---- simulate ----

int cmd_simulate(const fs::path& scenario_path, std::optional<std::uint64_t> seed, const fs::path& out) {
  const ordered_json doc = read_json(scenario_path);
  nlohmann::json plain = nlohmann::json::parse(doc.dump());
  if (seed) plain["seed"] = *seed;
  const simulate::SimScenario sc = simulate::scenario_from_json(plain);
  const simulate::Simulation sim = simulate::gen_dataset(sc);
  write_simulation(out, sc, sim);
  std::cout << "wrote " << sc.dims.S << " subjects x " << sc.dims.conditions() << " conditions to " << out.string()
            << '\n';
  return kExitOk;
}

// ---- fit ----

int cmd_fit(const fs::path& config_path, std::optional<std::uint64_t> seed, std::optional<int> threads_flag,
            std::optional<std::string> out_flag) {
  config::RunConfig cfg = config::load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out_flag) cfg.out_dir = *out_flag;
  const int threads = config::resolve_threads(threads_flag, cfg.threads);
  const config::PreparedRun run = config::prepare(cfg);
  const Dimensions dims = run.data.dimensions(cfg.K);

  fs::create_directories(cfg.out_dir);
  ordered_json meta;
  meta["tool"] = "bicnet";
  meta["config"] = config::run_config_to_json(cfg);
  meta["seed"] = cfg.seed;
  meta["threads"] = threads;
  meta["chains"] = cfg.chains;
  meta["single_subject"] = cfg.single_subject;
  meta["standardized"] = cfg.standardize;
  meta["d_sigma_used"] = run.hyper.d_sigma;
  meta["N"] = dims.N;
  meta["K"] = dims.K;
  meta["S"] = dims.S;
  meta["T"] = dims.T;
  meta["conditions"] = run.data.condition_names;
  meta["subjects"] = run.data.subject_ids;
  meta["has_rest"] = run.data.has_rest;
  meta["stored_draws_per_chain"] = cfg.policy().stored_count();
  meta["series"] = {{"lambda", "S x N x K"}, {"z", "S x N x K"},      {"pi0", "N x K"},
                    {"mu", "G x S x K"},     {"phi", "G x S x K"},    {"delta2", "G x S x K"},
                    {"sigma2", "G x S x N"}, {"loglik", "1"}};
  meta["decisions"] = decisions();
  write_json(cfg.out_dir / "metadata.json", meta);

  std::vector<sampler::ChainResult> results;
  try {
    results = run_chains(run.data, cfg.K, cfg, run.hyper, threads);
  } catch (const sampler::ChainFailure& e) {
    const int chain = e.snapshot().value("chain", 0);
    const fs::path dir = cfg.out_dir / ("chain_" + std::to_string(chain));
    fs::create_directories(dir);
    write_json(dir / "failure.json", ordered_json::parse(e.snapshot().dump()));
    throw;
  }
  for (std::size_t c = 0; c < results.size(); ++c) {
    store::save_chain(cfg.out_dir / ("chain_" + std::to_string(c)), results[c], cfg.csv_export);
    std::cout << "chain " << c << ": " << results[c].draws.at("lambda").size() << " draws, h acceptance "
              << fmt(results[c].acceptance.value("h", 0.0)) << '\n';
  }
  const auto sc = sampler::score_chain(run.data, results.front().draws, results.front().h_mean);
  ordered_json scores = {{"chain", 0},       {"loglik_hat", sc.loglik_hat}, {"params", sc.params},
                         {"n", sc.n},        {"aic", sc.aic},               {"bic", sc.bic},
                         {"dic", sc.dic},    {"p_d", sc.p_d},               {"skipped_time_points", sc.skipped}};
  write_json(cfg.out_dir / "scores.json", scores);
  return kExitOk;
}

// ---- summarize ----

int cmd_summarize(const fs::path& dir, double threshold, const std::string& estimator_name, double level, bool pool,
                  std::optional<std::string> out_flag) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
  posthoc::Estimator est;
  if (estimator_name == "median") {
    est = posthoc::Estimator::median;
  } else if (estimator_name == "mean") {
    est = posthoc::Estimator::mean;
  } else {
    throw ValidationError("estimator must be 'median' or 'mean'");
  }
  const LoadedStore ls = load_store(dir, pool);
  const fs::path out = out_flag ? fs::path(*out_flag) : dir / "summary";
  fs::create_directories(out);
  const auto& meta = ls.metadata;
  const int N = meta.at("N"), K = meta.at("K"), S = meta.at("S");
  const auto conditions = string_list(meta.at("conditions"));
  const auto subjects = string_list(meta.at("subjects"));
  const int G = static_cast<int>(conditions.size());
  const PosteriorDraws& draws = ls.chain.draws;

  const auto lam = posthoc::posterior_summary(draws.at("lambda"), est, level);
  const auto inc = sampler::series_mean(draws.at("z"));
  {
    auto f = open_text(out / "lambda.csv");
    f << "subject,region,factor,estimate,lower,upper,inclusion\n";
    for (int s = 0; s < S; ++s) {
      Matrix m(N, K);
      for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
          const std::size_t i = static_cast<std::size_t>((s * N + n) * K + k);
          m(n, k) = lam.estimate[i];
          f << subjects[s] << ',' << (n + 1) << ',' << (k + 1) << ',' << fmt(lam.estimate[i]) << ','
            << fmt(lam.lower[i]) << ',' << fmt(lam.upper[i]) << ',' << fmt(inc[i]) << '\n';
        }
      write_matrix_csv(out / ("lambda_" + subjects[s] + ".csv"), m);
    }
  }

  const auto pi = posthoc::posterior_summary(draws.at("pi0"), posthoc::Estimator::mean, level);
  Matrix pi_hat(N, K);
  for (int n = 0; n < N; ++n)
    for (int k = 0; k < K; ++k) pi_hat(n, k) = pi.estimate[static_cast<std::size_t>(n * K + k)];
  write_matrix_csv(out / "pi0.csv", pi_hat);
  const posthoc::GroupMap map = posthoc::threshold_group_map(pi_hat, threshold);
  write_matrix_csv(out / "group_map.csv", map.included.cast<double>());

  {
    auto f = open_text(out / "sv.csv");
    f << "condition,subject,factor,parameter,estimate,lower,upper\n";
    for (const char* name : {"mu", "phi", "delta2"}) {
      const auto sm = posthoc::posterior_summary(draws.at(name), est, level);
      for (int g = 0; g < G; ++g)
        for (int s = 0; s < S; ++s)
          for (int k = 0; k < K; ++k) {
            const std::size_t i = static_cast<std::size_t>((g * S + s) * K + k);
            f << conditions[g] << ',' << subjects[s] << ',' << (k + 1) << ',' << name << ',' << fmt(sm.estimate[i])
              << ',' << fmt(sm.lower[i]) << ',' << fmt(sm.upper[i]) << '\n';
          }
    }
  }
  {
    auto f = open_text(out / "sigma2.csv");
    f << "condition,subject,region,estimate,lower,upper\n";
    const auto sm = posthoc::posterior_summary(draws.at("sigma2"), est, level);
    for (int g = 0; g < G; ++g)
      for (int s = 0; s < S; ++s)
        for (int n = 0; n < N; ++n) {
          const std::size_t i = static_cast<std::size_t>((g * S + s) * N + n);
          f << conditions[g] << ',' << subjects[s] << ',' << (n + 1) << ',' << fmt(sm.estimate[i]) << ','
            << fmt(sm.lower[i]) << ',' << fmt(sm.upper[i]) << '\n';
        }
  }
  if (meta.value("has_rest", false) && G > 1) {
    auto f = open_text(out / "task_effects.csv");
    f << "condition,subject,factor,delta,sign,label,threshold\n";
    const auto rest = mu_draws(draws.at("mu"), 0, S, K);
    for (int g = 1; g < G; ++g) {
      const auto te = behavior::compute_task_effects(rest, mu_draws(draws.at("mu"), g, S, K));
      write_task_effects(te, conditions[g], subjects, f);
    }
  }
  ordered_json info = {{"estimator", estimator_name},
                       {"level", level},
                       {"threshold", threshold},
                       {"chains_pooled", ls.chains_used},
                       {"draws", draws.at("lambda").size()},
                       {"group_map_entries", map.included.cast<int>().sum()}};
  write_json(out / "summary.json", info);
  std::cout << "summary of " << draws.at("lambda").size() << " draws written to " << out.string() << '\n';
  return kExitOk;
}

// ---- regress ----

int cmd_regress(const fs::path& dir, const fs::path& behavior_path, const std::string& measure,
                const std::string& task, long iterations, long burn_in, double level, std::uint64_t seed,
                std::optional<double> fixed_threshold, std::optional<std::string> out_flag) {
  if (burn_in < 0 || burn_in >= iterations) throw ValidationError("burn-in < iterations required");
  const LoadedStore ls = load_store(dir, false);
  const auto& meta = ls.metadata;
  const auto conditions = string_list(meta.at("conditions"));
  const auto subjects = string_list(meta.at("subjects"));
  const int K = meta.at("K"), S = meta.at("S");
  if (!meta.value("has_rest", false)) throw ValidationError("task effects require rest");

  int g = -1;
  for (std::size_t i = 0; i < conditions.size(); ++i)
    if (conditions[i] == task) g = static_cast<int>(i);
  if (g < 0) {
    try {
      std::size_t pos = 0;
      const int idx = std::stoi(task, &pos);
      if (pos == task.size()) g = idx;
    } catch (const std::exception&) {
    }
  }
  if (g <= 0 || g >= static_cast<int>(conditions.size())) throw ValidationError("unknown task condition '" + task + "'");

  behavior::ThresholdPolicy policy;
  if (fixed_threshold) {
    policy.fixed = true;
    policy.value = *fixed_threshold;
  }
  const DrawSeries& mu = ls.chain.draws.at("mu");
  const auto te = behavior::compute_task_effects(mu_draws(mu, 0, S, K), mu_draws(mu, g, S, K), policy);

  const ingest::BehaviorTable table = ingest::load_behavior(behavior_path);
  const Vector z = behavior::center(table.measure(measure, subjects));
  const Matrix delta = behavior::center_columns(te.delta);

  Hyperparameters hyper;
  if (meta.contains("config") && meta["config"].contains("hyperparameters")) {
    const auto& h = meta["config"]["hyperparameters"];
    hyper.a = h.value("a", hyper.a);
    hyper.b = h.value("b", hyper.b);
    hyper.S2 = h.value("S2", hyper.S2);
    hyper.alpha1 = h.value("alpha1", hyper.alpha1);
    hyper.alpha2 = h.value("alpha2", hyper.alpha2);
  }
  const auto priors = behavior::RegressionPriors::from(hyper);
  RegressionState st = behavior::initial_regression_state(K);
  std::vector<std::vector<double>> beta(K);
  std::vector<double> inclusion(K, 0.0);
  long kept = 0;
  for (long it = 1; it <= iterations; ++it) {
    Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(StreamKind::regression), static_cast<std::uint64_t>(g),
                                 static_cast<std::uint64_t>(it)});
    st = behavior::regression_gibbs_sweep(z, delta, st, priors, rng);
    if (it > burn_in) {
      ++kept;
      for (int k = 0; k < K; ++k) {
        beta[k].push_back(st.beta[k]);
        inclusion[k] += st.pi[k];
      }
    }
  }
  const auto assoc = behavior::summarize_associations(beta, level);

  std::optional<behavior::OlsReport> ols;
  if (S > K + 1) {
    try {
      ols = behavior::ols_report(z, delta);
    } catch (const NumericalError&) {
    }
  }

  const fs::path out = out_flag ? fs::path(*out_flag) : dir / ("regress_" + conditions[g] + "_" + measure);
  fs::create_directories(out);
  {
    auto f = open_text(out / "task_effects.csv");
    f << "condition,subject,factor,delta,sign,label,threshold\n";
    write_task_effects(te, conditions[g], subjects, f);
  }
  auto f = open_text(out / "regression.csv");
  f << "factor,beta_mean,lower,upper,inclusion_prob,associated,ols_coef,ols_se,ols_p\n";
  for (int k = 0; k < K; ++k) {
    double m = 0.0;
    for (double b : beta[k]) m += b;
    m /= static_cast<double>(beta[k].size());
    f << (k + 1) << ',' << fmt(m) << ',' << fmt(assoc[k].lower) << ',' << fmt(assoc[k].upper) << ','
      << fmt(inclusion[k] / static_cast<double>(kept)) << ',' << (assoc[k].associated ? 1 : 0) << ',';
    if (ols) {
      f << fmt(ols->coefficient[k]) << ',' << fmt(ols->std_error[k]) << ',' << fmt(ols->p_value[k]);
    } else {
      f << ",,";
    }
    f << '\n';
    std::cout << "ICN " << (k + 1) << ": beta " << fmt(m) << " [" << fmt(assoc[k].lower) << ", "
              << fmt(assoc[k].upper) << "]" << (assoc[k].associated ? " associated" : "") << '\n';
  }
  return kExitOk;
}

// ---- select-k ----

int cmd_select_k(const fs::path& config_path, const std::vector<int>& ks, bool elbow, std::optional<std::uint64_t> seed,
                 std::optional<int> threads_flag, std::optional<std::string> out_flag) {
  config::RunConfig cfg = config::load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out_flag) cfg.out_dir = *out_flag;
  if (ks.empty()) throw ValidationError("--k needs at least one value");
  const int threads = config::resolve_threads(threads_flag, cfg.threads);
  const auto rows = select_k(cfg, ks, threads);

  fs::create_directories(cfg.out_dir);
  auto f = open_text(cfg.out_dir / "scores.csv");
  f << "K,loglik_hat,params,n,aic,bic,dic,p_d,skipped\n";
  std::cout << "K\tAIC\tBIC\tDIC\n";
  std::vector<double> aic;
  for (const auto& r : rows) {
    const auto& s = r.scores;
    f << r.K << ',' << fmt(s.loglik_hat) << ',' << s.params << ',' << s.n << ',' << fmt(s.aic) << ',' << fmt(s.bic)
      << ',' << fmt(s.dic) << ',' << fmt(s.p_d) << ',' << s.skipped << '\n';
    std::cout << r.K << '\t' << fmt(s.aic) << '\t' << fmt(s.bic) << '\t' << fmt(s.dic) << '\n';
    aic.push_back(s.aic);
  }
  if (elbow) std::cout << "elbow K = " << posthoc::pick_elbow(ks, aic) << '\n';
  return kExitOk;
}

// ---- compare ----

int cmd_compare(const fs::path& a_path, const fs::path& b_path, std::optional<std::string> out_flag) {
  const Matrix a = ingest::read_csv_matrix(a_path), b = ingest::read_csv_matrix(b_path);
  if (a.cols() != b.cols()) throw ValidationError("map files must have the same number of columns");
  if (a.rows() != b.rows()) throw ValidationError("map files must cover the same regions");
  const auto to_sets = [](const Matrix& m) { return posthoc::map_sets((m.array() != 0.0).cast<std::uint8_t>()); };
  const auto match = posthoc::match_maps(to_sets(a), to_sets(b));
  char line[128];
  std::snprintf(line, sizeof line, "mean Jaccard similarity: %.4f±%.4f", match.mean, match.sd);
  std::cout << line << '\n';
  if (out_flag) {
    fs::create_directories(*out_flag);
    auto f = open_text(fs::path(*out_flag) / "compare.csv");
    f << "map_a,map_b,jaccard\n";
    for (std::size_t i = 0; i < match.mapping.size(); ++i)
      f << (i + 1) << ',' << (match.mapping[i] + 1) << ',' << fmt(match.matched[i]) << '\n';
  }
  return kExitOk;
}

}  // namespace

void write_simulation(const fs::path& out, const simulate::SimScenario& sc, const simulate::Simulation& sim) {
  fs::create_directories(out);
  const Dataset& d = sim.data;
  std::vector<std::vector<std::string>> files(d.conditions());
  for (int g = 0; g < d.conditions(); ++g)
    for (int s = 0; s < d.subjects(); ++s) {
      const std::string name = d.condition_names[g] + "_" + d.subject_ids[s] + ".csv";
      ingest::write_csv_matrix(out / name, d.y[g][s].transpose());
      files[g].push_back(name);
    }
  ingest::write_manifest(out / "manifest.json", d.condition_names, d.subject_ids, files, d.has_rest);
  open_text(out / "scenario.json") << simulate::scenario_to_json(sc).dump(2) << '\n';
  open_text(out / "truth.json") << simulate::truth_to_json(sim.truth, sc).dump() << '\n';
}

std::vector<sampler::ChainResult> run_chains(const Dataset& data, int K, const config::RunConfig& cfg,
                                             const Hyperparameters& hyper, int threads) {
  const int chains = cfg.chains;
  std::vector<sampler::ChainResult> results(chains);
  std::vector<std::exception_ptr> errors(chains);
  const bool outer = threads > 1 && chains > 1;
  const int inner = outer ? 1 : threads;
#pragma omp parallel for schedule(dynamic) num_threads(std::min(threads, chains)) if (outer)
  for (int c = 0; c < chains; ++c) {
    try {
      results[c] = sampler::run_chain(data, K, config::sampler_config(cfg, hyper, c, inner));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::vector<ScoreRow> select_k(const config::RunConfig& base, const std::vector<int>& ks, int threads) {
  config::RunConfig cfg = base;
  cfg.chains = 1;
  const config::PreparedRun first = config::prepare(cfg);
  for (int k : ks) first.data.dimensions(k).validate();
  std::vector<ScoreRow> rows;
  for (int k : ks) {
    cfg.K = k;
    Hyperparameters hyper = first.hyper;
    if (hyper.A.size() != 0 && hyper.A.cols() != k) throw ValidationError("prior map A must have K columns");
    auto results = run_chains(first.data, k, cfg, hyper, threads);
    rows.push_back({k, sampler::score_chain(first.data, results.front().draws, results.front().h_mean)});
  }
  return rows;
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian sparse dynamic factor model for brain networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, store_dir, behavior_path, measure, task, estimator = "median", map_a, map_b;
  std::uint64_t seed = 0;
  int threads = 0;
  double threshold = 0.999, level = 0.95, ks_threshold = 0.0;
  long iterations = 20000, burn_in = 5000;
  bool pool = false;
  std::string pick;
  std::vector<int> ks;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config_path, "JSON configuration file");
    if (config_required) c->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the configuration)");
    sub->add_option("--threads", threads, "worker threads (default: BICNET_THREADS, then 1)");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset from a scenario file");
  common(sim, true);
  auto* fit = app.add_subcommand("fit", "run the sampler and write the draw store");
  common(fit, true);
  auto* sum = app.add_subcommand("summarize", "posterior summaries and thresholded group map");
  common(sum, false);
  sum->add_option("--store", store_dir, "draw store directory")->required();
  sum->add_option("--threshold", threshold, "group map threshold on the inclusion probabilities");
  sum->add_option("--estimator", estimator, "median or mean");
  sum->add_option("--level", level, "credible level");
  sum->add_flag("--pool", pool, "align every chain to chain 0 and pool the draws");
  auto* reg = app.add_subcommand("regress", "sparse regression of a behavioral measure on task effects");
  common(reg, false);
  reg->add_option("--store", store_dir, "draw store directory")->required();
  reg->add_option("--behavior", behavior_path, "CSV with header subject,<measure>,...")->required();
  reg->add_option("--measure", measure, "behavioral column")->required();
  reg->add_option("--task", task, "task condition name or index")->required();
  reg->add_option("--iterations", iterations, "regression sweeps including burn-in");
  reg->add_option("--burn-in", burn_in, "discarded regression sweeps");
  reg->add_option("--level", level, "credible level");
  auto* ks_opt = reg->add_option("--ks-threshold", ks_threshold, "fixed activation threshold on the KS distance");
  auto* sel = app.add_subcommand("select-k", "information criteria over a list of factor counts");
  common(sel, true);
  sel->add_option("--k", ks, "comma-separated factor counts")->required()->delimiter(',');
  sel->add_option("--pick", pick, "elbow: flag the smallest K within one sd of the minimum AIC");
  auto* cmp = app.add_subcommand("compare", "match two sets of spatial maps by Jaccard similarity");
  common(cmp, false);
  cmp->add_option("--a", map_a, "first map CSV (regions x maps, nonzero = member)")->required()->check(CLI::ExistingFile);
  cmp->add_option("--b", map_b, "second map CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  auto opt_seed = [&](CLI::App* sub) {
    return sub->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt;
  };
  auto opt_threads = [&](CLI::App* sub) { return sub->count("--threads") ? std::optional<int>(threads) : std::nullopt; };
  auto opt_out = [&](CLI::App* sub) {
    return sub->count("--out") ? std::optional<std::string>(out_dir) : std::nullopt;
  };

  try {
    if (*sim) return cmd_simulate(config_path, opt_seed(sim), out_dir.empty() ? fs::path("sim_out") : fs::path(out_dir));
    if (*fit) return cmd_fit(config_path, opt_seed(fit), opt_threads(fit), opt_out(fit));
    if (*sum) return cmd_summarize(store_dir, threshold, estimator, level, pool, opt_out(sum));
    if (*reg)
      return cmd_regress(store_dir, behavior_path, measure, task, iterations, burn_in, level,
                         reg->count("--seed") ? seed : 1, ks_opt->count() ? std::optional<double>(ks_threshold)
                                                                         : std::nullopt,
                         opt_out(reg));
    if (*sel) {
      if (!pick.empty() && pick != "elbow") throw ValidationError("--pick accepts only 'elbow'");
      return cmd_select_k(config_path, ks, pick == "elbow", opt_seed(sel), opt_threads(sel), opt_out(sel));
    }
    if (*cmp) return cmd_compare(map_a, map_b, opt_out(cmp));
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace bicnet::cli
