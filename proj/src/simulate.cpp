#include "bicnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bicnet::simulate {

namespace {

constexpr std::uint64_t kLoadingStream = 0;
constexpr std::uint64_t kGroupStream = 0xA11;
constexpr std::uint64_t kLevelStream = 0xB22;

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ValidationError("invalid field '" + field + "': " + why);
}

}  // namespace

void SimScenario::validate() const {
  require(dims.N >= 1 && dims.K >= 1 && dims.S >= 1, "N/K/S", "must be positive");
  require(dims.K < dims.N, "K", "K < N required");
  require(!dims.T.empty(), "T", "at least one condition required");
  for (int t : dims.T) require(t >= 2, "T", "every condition needs at least 2 time points");
  require(static_cast<int>(condition_names.size()) == dims.conditions(), "conditions",
          "one name per condition required");
  if (group_map.size() == 0) {
    require(static_cast<int>(nonsparsity.size()) == dims.S, "nonsparsity", "one fraction per subject required");
    for (double f : nonsparsity) require(f >= 0.0 && f <= 1.0, "nonsparsity", "fractions must lie in [0, 1]");
  } else {
    require(group_map.rows() == dims.N && group_map.cols() == dims.K, "group_map", "must be N x K");
    require((group_map.array() >= 0.0).all() && (group_map.array() <= 1.0).all(), "group_map",
            "probabilities must lie in [0, 1]");
  }
  require(std::abs(phi) < 1.0, "phi", "non-stationary phi (|phi| < 1 required)");
  require(delta2 >= 0.0, "delta", "must be non-negative");
  require(sigma2 > 0.0, "sigma2", "must be positive");
  require(tau2 > 0.0, "tau2", "must be positive");
  require(static_cast<int>(mu.size()) == dims.conditions(), "mu", "one block per condition required");
  for (const auto& g : mu) {
    require(static_cast<int>(g.size()) == dims.S, "mu", "one row per subject required");
    for (const auto& s : g) require(static_cast<int>(s.size()) == dims.K, "mu", "one value per factor required");
  }
}

SimScenario small_scale_scenario(int T, std::uint64_t seed) {
  SimScenario sc;
  sc.dims = {6, 3, 6, {T, T}};
  sc.condition_names = {"rest", "task"};
  sc.nonsparsity = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  sc.mu.assign(2, std::vector<std::vector<double>>(6, {1.0, 0.0, -1.0}));
  sc.phi = 0.9;
  sc.delta2 = 0.25;
  sc.seed = seed;
  return sc;
}

SimScenario group_scenario(int N, int K, int S, int T, std::uint64_t seed, GroupMapSpec spec) {
  SimScenario sc;
  sc.dims = {N, K, S, {T}};
  sc.condition_names = {"rest"};
  sc.mu.assign(1, std::vector<std::vector<double>>(S, std::vector<double>(K, 0.0)));
  sc.seed = seed;
  Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(StreamKind::simulate), kGroupStream});
  sc.group_map = make_group_map(N, K, spec, rng);
  return sc;
}

Matrix make_group_map(int N, int K, const GroupMapSpec& spec, Rng& rng) {
  const int members = std::max(1, static_cast<int>(std::lround(spec.member_fraction * N)));
  Matrix pi = Matrix::Constant(N, K, spec.nonmember_prob);
  std::vector<int> rows(N);
  for (int k = 0; k < K; ++k) {
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng.engine());
    for (int i = 0; i < members; ++i) pi(rows[i], k) = spec.member_prob;
  }
  return pi;
}

int nonzero_count(double fraction, int N, int K) { return static_cast<int>(std::lround(fraction * N * K)); }

std::pair<std::vector<Matrix>, std::vector<IndicatorMatrix>> gen_loadings(const SimScenario& sc) {
  const int N = sc.dims.N, K = sc.dims.K, S = sc.dims.S;
  std::vector<Matrix> lambda(S, Matrix::Zero(N, K));
  std::vector<IndicatorMatrix> z(S, IndicatorMatrix::Zero(N, K));
  for (int s = 0; s < S; ++s) {
    Rng rng = Rng::stream(sc.seed, {static_cast<std::uint64_t>(StreamKind::simulate), kLoadingStream,
                                    static_cast<std::uint64_t>(s)});
    IndicatorMatrix& Z = z[s];
    if (sc.group_map.size() == 0) {
      const int count = nonzero_count(sc.nonsparsity[s], N, K);
      if (count < K) throw ValidationError("empty ICN: non-sparsity leaves a column without members");
      // One member per column first, remaining positions uniformly without replacement.
      std::vector<int> free;
      for (int k = 0; k < K; ++k) {
        const int n = static_cast<int>(rng.next() % static_cast<std::uint64_t>(N));
        Z(n, k) = 1;
      }
      for (int i = 0; i < N * K; ++i)
        if (!Z(i % N, i / N)) free.push_back(i);
      std::shuffle(free.begin(), free.end(), rng.engine());
      for (int i = 0; i < count - K; ++i) Z(free[i] % N, free[i] / N) = 1;
    } else {
      for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) Z(n, k) = rng.uniform() < sc.group_map(n, k) ? 1 : 0;
        if (Z.col(k).cast<int>().sum() == 0) {
          Eigen::Index best;
          sc.group_map.col(k).maxCoeff(&best);
          Z(best, k) = 1;
        }
      }
    }
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) {
        if (!Z(n, k)) continue;
        if (sc.mode == LoadingMode::slab) {
          lambda[s](n, k) = std::sqrt(sc.tau2) * rng.normal();
        } else {
          lambda[s](n, k) = rng.uniform() < 0.5 ? -1.0 : 1.0;
        }
      }
  }
  return {std::move(lambda), std::move(z)};
}

std::vector<double> gen_sv_path(double mu, double phi, double delta2, int T, Rng& rng) {
  if (!(std::abs(phi) < 1.0)) throw ValidationError("non-stationary phi (|phi| < 1 required)");
  if (delta2 < 0.0) throw ValidationError("delta2 must be non-negative");
  std::vector<double> h(T);
  const double delta = std::sqrt(delta2);
  h[0] = mu + delta / std::sqrt(1.0 - phi * phi) * rng.normal();
  for (int t = 1; t < T; ++t) h[t] = mu + phi * (h[t - 1] - mu) + delta * rng.normal();
  return h;
}

std::vector<double> gen_sv_path(double mu, double phi, double delta2, int T, std::uint64_t seed) {
  Rng rng(seed);
  return gen_sv_path(mu, phi, delta2, T, rng);
}

Simulation gen_dataset(const SimScenario& sc) {
  sc.validate();
  const Dimensions& d = sc.dims;
  auto [lambda, z] = gen_loadings(sc);

  Simulation sim;
  ChainState& truth = sim.truth;
  truth.lambda = std::move(lambda);
  truth.z = std::move(z);
  truth.cond.assign(d.conditions(), std::vector<ConditionState>(d.S));
  if (sc.group_map.size() != 0) {
    truth.pi0 = sc.group_map.cwiseMax(1e-15).cwiseMin(1.0 - 1e-15);
  } else {
    const double mean_fraction = std::accumulate(sc.nonsparsity.begin(), sc.nonsparsity.end(), 0.0) / d.S;
    truth.pi0 = Matrix::Constant(d.N, d.K, std::clamp(mean_fraction, 1e-15, 1.0 - 1e-15));
  }

  Dataset& data = sim.data;
  data.condition_names = sc.condition_names;
  data.has_rest = true;
  for (int s = 0; s < d.S; ++s) data.subject_ids.push_back("sub" + std::to_string(s + 1));
  data.y.assign(d.conditions(), std::vector<Matrix>(d.S));

  for (int s = 0; s < d.S; ++s)
    for (int g = 0; g < d.conditions(); ++g) {
      Rng rng = Rng::stream(sc.seed, {static_cast<std::uint64_t>(StreamKind::simulate), static_cast<std::uint64_t>(g + 1),
                                      static_cast<std::uint64_t>(s)});
      const int T = d.T[g];
      ConditionState& c = truth.cond[g][s];
      c.F.resize(d.K, T);
      c.H.resize(d.K, T);
      c.mu = Eigen::Map<const Vector>(sc.mu[g][s].data(), d.K);
      c.phi = Vector::Constant(d.K, sc.phi);
      c.delta2 = Vector::Constant(d.K, sc.delta2);
      c.sigma2 = Vector::Constant(d.N, sc.sigma2);
      for (int k = 0; k < d.K; ++k) {
        const auto h = gen_sv_path(c.mu[k], sc.phi, sc.delta2, T, rng);
        for (int t = 0; t < T; ++t) {
          c.H(k, t) = h[t];
          c.F(k, t) = std::exp(0.5 * h[t]) * rng.normal();
        }
      }
      Matrix Y = truth.lambda[s] * c.F;
      const double sd = std::sqrt(sc.sigma2);
      for (int t = 0; t < T; ++t)
        for (int n = 0; n < d.N; ++n) Y(n, t) += sd * rng.normal();
      data.y[g][s] = std::move(Y);
    }
  return sim;
}

SimScenario scenario_from_json(const nlohmann::json& doc) {
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!doc.contains(name)) throw ValidationError(std::string("invalid field '") + name + "': missing");
    return doc.at(name);
  };
  SimScenario sc;
  try {
    sc.dims.N = field("N").get<int>();
    sc.dims.K = field("K").get<int>();
    sc.dims.S = field("S").get<int>();
    const auto& T = field("T");
    if (T.is_array()) {
      sc.dims.T = T.get<std::vector<int>>();
    } else {
      sc.dims.T = {T.get<int>()};
    }
    const int G = sc.dims.conditions();
    if (doc.contains("conditions")) {
      sc.condition_names = doc["conditions"].get<std::vector<std::string>>();
    } else {
      sc.condition_names.push_back("rest");
      for (int g = 1; g < G; ++g) sc.condition_names.push_back("task" + std::to_string(g));
    }
    sc.seed = doc.value("seed", std::uint64_t{1});
    sc.phi = doc.value("phi", 0.9);
    const double delta = doc.value("delta", 0.5);
    if (delta < 0.0) throw ValidationError("invalid field 'delta': must be non-negative");
    sc.delta2 = delta * delta;
    sc.sigma2 = doc.value("sigma2", 0.0625);
    sc.tau2 = doc.value("tau2", 1.0);
    const std::string mode = doc.value("loading_mode", std::string("slab"));
    if (mode == "slab") {
      sc.mode = LoadingMode::slab;
    } else if (mode == "fixed") {
      sc.mode = LoadingMode::fixed;
    } else {
      throw ValidationError("invalid field 'loading_mode': expected 'slab' or 'fixed'");
    }

    if (doc.contains("group_map_matrix")) {
      const auto rows = doc["group_map_matrix"].get<std::vector<std::vector<double>>>();
      if (static_cast<int>(rows.size()) != sc.dims.N)
        throw ValidationError("invalid field 'group_map_matrix': expected N rows");
      sc.group_map.resize(sc.dims.N, sc.dims.K);
      for (int n = 0; n < sc.dims.N; ++n) {
        if (static_cast<int>(rows[n].size()) != sc.dims.K)
          throw ValidationError("invalid field 'group_map_matrix': expected K columns");
        for (int k = 0; k < sc.dims.K; ++k) sc.group_map(n, k) = rows[n][k];
      }
    } else if (doc.contains("group_map")) {
      const auto& gm = doc["group_map"];
      GroupMapSpec spec;
      spec.member_fraction = gm.value("member_fraction", spec.member_fraction);
      spec.member_prob = gm.value("member_prob", spec.member_prob);
      spec.nonmember_prob = gm.value("nonmember_prob", spec.nonmember_prob);
      if (!(spec.member_fraction > 0.0 && spec.member_fraction <= 1.0))
        throw ValidationError("invalid field 'group_map.member_fraction': must lie in (0, 1]");
      if (!(spec.member_prob >= 0.0 && spec.member_prob <= 1.0 && spec.nonmember_prob >= 0.0 &&
            spec.nonmember_prob <= 1.0))
        throw ValidationError("invalid field 'group_map': probabilities must lie in [0, 1]");
      if (sc.dims.N < 1 || sc.dims.K < 1) throw ValidationError("invalid field 'N/K': must be positive");
      Rng rng = Rng::stream(sc.seed, {static_cast<std::uint64_t>(StreamKind::simulate), kGroupStream});
      sc.group_map = make_group_map(sc.dims.N, sc.dims.K, spec, rng);
    } else {
      const auto& ns = field("nonsparsity");
      if (ns.is_array()) {
        sc.nonsparsity = ns.get<std::vector<double>>();
      } else {
        sc.nonsparsity.assign(std::max(sc.dims.S, 0), ns.get<double>());
      }
    }

    std::vector<std::vector<double>> base;  // [g][k]
    if (doc.contains("mu") && doc["mu"].is_array() && !doc["mu"].empty() && doc["mu"].front().is_array() &&
        !doc["mu"].front().empty() && doc["mu"].front().front().is_array()) {
      sc.mu = doc["mu"].get<std::vector<std::vector<std::vector<double>>>>();
    } else if (doc.contains("mu")) {
      const auto& mu = doc["mu"];
      if (!mu.is_array() || mu.empty()) throw ValidationError("invalid field 'mu': expected array");
      if (mu.front().is_array()) {
        base = mu.get<std::vector<std::vector<double>>>();
      } else {
        base.assign(G, mu.get<std::vector<double>>());
      }
    } else {
      std::vector<double> row(std::max(sc.dims.K, 0));
      for (int k = 0; k < sc.dims.K; ++k) row[k] = 1.0 - k;  // 2 - k with 1-based k
      base.assign(G, row);
    }
    if (sc.mu.empty()) {
      if (static_cast<int>(base.size()) != G) throw ValidationError("invalid field 'mu': one row per condition required");
      const double spread = doc.value("mu_subject_sd", 0.0);
      if (spread < 0.0) throw ValidationError("invalid field 'mu_subject_sd': must be non-negative");
      sc.mu.assign(G, std::vector<std::vector<double>>(std::max(sc.dims.S, 0)));
      for (int s = 0; s < sc.dims.S; ++s) {
        Rng rng = Rng::stream(sc.seed, {static_cast<std::uint64_t>(StreamKind::simulate), kLevelStream,
                                        static_cast<std::uint64_t>(s)});
        for (int g = 0; g < G; ++g) {
          sc.mu[g][s] = base[g];
          if (g > 0 && spread > 0.0)
            for (auto& v : sc.mu[g][s]) v += spread * rng.normal();
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[j] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

nlohmann::json scenario_to_json(const SimScenario& sc) {
  nlohmann::json doc;
  doc["N"] = sc.dims.N;
  doc["K"] = sc.dims.K;
  doc["S"] = sc.dims.S;
  doc["T"] = sc.dims.T;
  doc["conditions"] = sc.condition_names;
  doc["phi"] = sc.phi;
  doc["delta"] = std::sqrt(sc.delta2);
  doc["sigma2"] = sc.sigma2;
  doc["tau2"] = sc.tau2;
  doc["seed"] = sc.seed;
  doc["loading_mode"] = sc.mode == LoadingMode::slab ? "slab" : "fixed";
  if (sc.group_map.size() == 0) {
    doc["nonsparsity"] = sc.nonsparsity;
  } else {
    doc["group_map_matrix"] = matrix_json(sc.group_map);
  }
  doc["mu"] = sc.mu;
  return doc;
}

nlohmann::json truth_to_json(const ChainState& truth, const SimScenario& sc) {
  nlohmann::json doc;
  doc["scenario"] = scenario_to_json(sc);
  doc["lambda"] = nlohmann::json::array();
  doc["z"] = nlohmann::json::array();
  for (std::size_t s = 0; s < truth.lambda.size(); ++s) {
    doc["lambda"].push_back(matrix_json(truth.lambda[s]));
    doc["z"].push_back(matrix_json(truth.z[s].cast<double>()));
  }
  doc["pi0"] = matrix_json(truth.pi0);
  doc["sigma2"] = sc.sigma2;
  doc["phi"] = sc.phi;
  doc["delta2"] = sc.delta2;
  doc["mu"] = sc.mu;
  return doc;
}

ChainState draw_from_prior(const Dimensions& d, const Hyperparameters& hyper, bool sample_group, Rng& rng) {
  ChainState st;
  st.pi0.resize(d.N, d.K);
  for (int k = 0; k < d.K; ++k)
    for (int n = 0; n < d.N; ++n) {
      const double a = hyper.prior_mean(n, k);
      st.pi0(n, k) = sample_group ? std::clamp(rng.beta(hyper.c * a, hyper.c * (1.0 - a)), 1e-15, 1.0 - 1e-15) : a;
    }
  for (int s = 0; s < d.S; ++s) {
    Matrix L = Matrix::Zero(d.N, d.K);
    IndicatorMatrix Z = IndicatorMatrix::Zero(d.N, d.K);
    for (int k = 0; k < d.K; ++k)
      for (int n = 0; n < d.N; ++n)
        if (rng.uniform() < st.pi0(n, k)) {
          Z(n, k) = 1;
          L(n, k) = std::sqrt(hyper.tau2_load) * rng.normal();
        }
    st.lambda.push_back(std::move(L));
    st.z.push_back(std::move(Z));
  }
  st.cond.assign(d.conditions(), std::vector<ConditionState>(d.S));
  for (int g = 0; g < d.conditions(); ++g)
    for (int s = 0; s < d.S; ++s) {
      ConditionState& c = st.cond[g][s];
      const int T = d.T[g];
      c.mu.resize(d.K);
      c.phi.resize(d.K);
      c.delta2.resize(d.K);
      c.F.resize(d.K, T);
      c.H.resize(d.K, T);
      for (int k = 0; k < d.K; ++k) {
        c.mu[k] = hyper.b_mu + std::sqrt(hyper.B_mu) * rng.normal();
        c.phi[k] = 2.0 * rng.beta(hyper.a_phi, hyper.b_phi) - 1.0;
        c.phi[k] = std::clamp(c.phi[k], -1.0 + 1e-12, 1.0 - 1e-12);
        c.delta2[k] = rng.gamma(0.5, 1.0 / (2.0 * hyper.B_delta));
        const auto h = gen_sv_path(c.mu[k], c.phi[k], c.delta2[k], T, rng);
        for (int t = 0; t < T; ++t) {
          c.H(k, t) = h[t];
          c.F(k, t) = std::exp(0.5 * h[t]) * rng.normal();
        }
      }
      c.sigma2.resize(d.N);
      for (int n = 0; n < d.N; ++n) c.sigma2[n] = rng.inv_gamma(hyper.c_sigma, hyper.d_sigma);
    }
  return st;
}

Dataset generate_observations(const ChainState& st, const Dimensions& d, Rng& rng) {
  Dataset data;
  data.has_rest = true;
  for (int g = 0; g < d.conditions(); ++g) data.condition_names.push_back(g == 0 ? "rest" : "task" + std::to_string(g));
  for (int s = 0; s < d.S; ++s) data.subject_ids.push_back("sub" + std::to_string(s + 1));
  data.y.assign(d.conditions(), std::vector<Matrix>(d.S));
  for (int g = 0; g < d.conditions(); ++g)
    for (int s = 0; s < d.S; ++s) {
      const ConditionState& c = st.cond[g][s];
      Matrix Y = st.lambda[s] * c.F;
      for (Eigen::Index t = 0; t < Y.cols(); ++t)
        for (int n = 0; n < d.N; ++n) Y(n, t) += std::sqrt(c.sigma2[n]) * rng.normal();
      data.y[g][s] = std::move(Y);
    }
  return data;
}

}  // namespace bicnet::simulate
