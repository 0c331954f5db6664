#include "bicnet/config.hpp"

#include "bicnet/ingest.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace bicnet::config {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTopLevel = {"manifest", "K",       "hyperparameters", "chains",        "iterations",
                                         "burn_in",  "thin",    "seed",            "out_dir",       "single_subject",
                                         "standardize", "csv_export", "threads", "init"};

const std::set<std::string> kHyper = {"b_mu", "B_mu", "a_phi", "b_phi", "B_delta", "c_sigma", "d_sigma", "tau2",
                                      "c",    "a_default", "A", "a", "b", "S2", "alpha1", "alpha2"};

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_relative() ? base / p : p; }

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ValidationError("invalid field 'A': ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

}  // namespace

void RunConfig::validate() const {
  if (manifest.empty()) throw ValidationError("invalid field 'manifest': missing");
  if (K < 1) throw ValidationError("invalid field 'K': must be positive");
  if (chains < 1) throw ValidationError("invalid field 'chains': must be at least 1");
  if (thin < 1) throw ValidationError("invalid field 'thin': must be at least 1");
  if (burn_in < 0 || burn_in >= iterations) throw ValidationError("invalid field 'burn_in': burn-in < iterations required");
  if (d_sigma && !(*d_sigma > 0.0)) throw ValidationError("invalid field 'd_sigma': must be positive");
  if (threads < 0) throw ValidationError("invalid field 'threads': must be non-negative");
}

RunConfig run_config_from_json(const nlohmann::json& doc, const fs::path& base) {
  if (!doc.is_object()) throw ValidationError("run config must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!kTopLevel.count(key)) throw ValidationError("unknown config field '" + key + "'");
  RunConfig cfg;
  try {
    if (!doc.contains("manifest")) throw ValidationError("invalid field 'manifest': missing");
    cfg.manifest = resolve(doc.at("manifest").get<std::string>(), base);
    if (!doc.contains("K")) throw ValidationError("invalid field 'K': missing");
    cfg.K = doc.at("K").get<int>();
    cfg.chains = doc.value("chains", 1);
    if (!doc.contains("iterations")) throw ValidationError("invalid field 'iterations': missing");
    cfg.iterations = doc.at("iterations").get<long>();
    cfg.burn_in = doc.value("burn_in", cfg.iterations / 2);
    cfg.thin = doc.value("thin", 1L);
    cfg.seed = doc.value("seed", std::uint64_t{1});
    if (doc.contains("out_dir")) cfg.out_dir = resolve(doc.at("out_dir").get<std::string>(), base);
    cfg.single_subject = doc.value("single_subject", false);
    cfg.standardize = doc.value("standardize", true);
    cfg.csv_export = doc.value("csv_export", true);
    cfg.threads = doc.value("threads", 0);
    const std::string init = doc.value("init", std::string("prior"));
    if (init == "prior") cfg.init = sampler::InitMethod::prior;
    else if (init == "spectral") cfg.init = sampler::InitMethod::spectral;
    else throw ValidationError("invalid field 'init': expected \"prior\" or \"spectral\"");
    if (doc.contains("hyperparameters")) {
      const auto& h = doc.at("hyperparameters");
      for (const auto& [key, _] : h.items())
        if (!kHyper.count(key)) throw ValidationError("unknown hyperparameter '" + key + "'");
      Hyperparameters& hy = cfg.hyperparameters;
      hy.b_mu = h.value("b_mu", hy.b_mu);
      hy.B_mu = h.value("B_mu", hy.B_mu);
      hy.a_phi = h.value("a_phi", hy.a_phi);
      hy.b_phi = h.value("b_phi", hy.b_phi);
      hy.B_delta = h.value("B_delta", hy.B_delta);
      hy.c_sigma = h.value("c_sigma", hy.c_sigma);
      if (h.contains("d_sigma")) cfg.d_sigma = h.at("d_sigma").get<double>();
      hy.tau2_load = h.value("tau2", hy.tau2_load);
      hy.c = h.value("c", hy.c);
      hy.a_default = h.value("a_default", hy.a_default);
      if (h.contains("A")) {
        const auto& a = h.at("A");
        hy.A = a.is_string() ? ingest::read_csv_matrix(resolve(a.get<std::string>(), base)) : matrix_from_json(a);
      }
      hy.a = h.value("a", hy.a);
      hy.b = h.value("b", hy.b);
      hy.S2 = h.value("S2", hy.S2);
      hy.alpha1 = h.value("alpha1", hy.alpha1);
      hy.alpha2 = h.value("alpha2", hy.alpha2);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["manifest"] = fs::absolute(cfg.manifest).lexically_normal().string();
  doc["K"] = cfg.K;
  const Hyperparameters& hy = cfg.hyperparameters;
  nlohmann::ordered_json h;
  h["b_mu"] = hy.b_mu;
  h["B_mu"] = hy.B_mu;
  h["a_phi"] = hy.a_phi;
  h["b_phi"] = hy.b_phi;
  h["B_delta"] = hy.B_delta;
  h["c_sigma"] = hy.c_sigma;
  if (cfg.d_sigma) h["d_sigma"] = *cfg.d_sigma;
  h["tau2"] = hy.tau2_load;
  h["c"] = hy.c;
  h["a_default"] = hy.a_default;
  if (hy.A.size() > 0) {
    std::vector<std::vector<double>> rows(hy.A.rows(), std::vector<double>(hy.A.cols()));
    for (Eigen::Index i = 0; i < hy.A.rows(); ++i)
      for (Eigen::Index k = 0; k < hy.A.cols(); ++k) rows[i][k] = hy.A(i, k);
    h["A"] = rows;
  }
  h["a"] = hy.a;
  h["b"] = hy.b;
  h["S2"] = hy.S2;
  h["alpha1"] = hy.alpha1;
  h["alpha2"] = hy.alpha2;
  doc["hyperparameters"] = h;
  doc["chains"] = cfg.chains;
  doc["iterations"] = cfg.iterations;
  doc["burn_in"] = cfg.burn_in;
  doc["thin"] = cfg.thin;
  doc["seed"] = cfg.seed;
  doc["out_dir"] = fs::absolute(cfg.out_dir).lexically_normal().string();
  doc["single_subject"] = cfg.single_subject;
  doc["standardize"] = cfg.standardize;
  doc["csv_export"] = cfg.csv_export;
  doc["threads"] = cfg.threads;
  doc["init"] = cfg.init == sampler::InitMethod::prior ? "prior" : "spectral";
  return doc;
}

PreparedRun prepare(const RunConfig& cfg) {
  PreparedRun run;
  run.data = ingest::load_dataset(cfg.manifest);
  if (cfg.standardize) ingest::standardize(run.data);
  run.hyper = cfg.hyperparameters;
  run.hyper.d_sigma = cfg.d_sigma ? *cfg.d_sigma : 1.0 / ingest::pooled_variance(run.data);
  const Dimensions dims = run.data.dimensions(cfg.K);
  dims.validate();
  run.hyper.validate(dims);
  return run;
}

sampler::SamplerConfig sampler_config(const RunConfig& cfg, const Hyperparameters& hyper, int chain, int threads) {
  sampler::SamplerConfig sc;
  sc.hyper = hyper;
  sc.policy = cfg.policy();
  sc.seed = cfg.seed;
  sc.chain = chain;
  sc.threads = threads;
  sc.single_subject = cfg.single_subject;
  sc.init = cfg.init;
  return sc;
}

int resolve_threads(std::optional<int> flag, int config_value) {
  if (flag) {
    if (*flag < 1) throw ValidationError("--threads must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("BICNET_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ValidationError("BICNET_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return config_value > 0 ? config_value : 1;
}

}  // namespace bicnet::config
