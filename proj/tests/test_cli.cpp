#include "bicnet/commands.hpp"
#include "bicnet/config.hpp"
#include "bicnet/draw_store.hpp"
#include "bicnet/ingest.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace bicnet;
using testing::any_contains;
using testing::slurp;
using testing::spit;
using testing::TempDir;

namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "bicnet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Invocation r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const char* kScenario = R"({
  "N": 4, "K": 2, "S": 3, "T": [80, 80],
  "conditions": ["rest", "task"],
  "nonsparsity": 0.75,
  "mu": [[1.0, 0.0], [1.5, -0.5]],
  "seed": 5
})";

// Simulates into <dir>/data and writes <dir>/run.json for it.
fs::path prepare_run(const TempDir& dir, const std::string& extra = "") {
  spit(dir / "scenario.json", kScenario);
  const Invocation sim = invoke({"simulate", "--config", (dir / "scenario.json").string(), "--out",
                                 (dir / "data").string()});
  REQUIRE(sim.code == 0);
  spit(dir / "run.json", R"({"manifest": "data/manifest.json", "K": 2, "iterations": 40, "burn_in": 20,
                             "seed": 11, "out_dir": "fit")" + extra + "}");
  return dir / "run.json";
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (const char* old = std::getenv("BICNET_THREADS")) saved = old;
    if (value) ::setenv("BICNET_THREADS", value, 1);
    else ::unsetenv("BICNET_THREADS");
  }
  ~EnvGuard() {
    if (saved.empty()) ::unsetenv("BICNET_THREADS");
    else ::setenv("BICNET_THREADS", saved.c_str(), 1);
  }
  std::string saved;
};

}  // namespace

TEST_CASE("config: fields, defaults and errors") {
  TempDir dir("config");
  const nlohmann::json base = {{"manifest", "m.json"}, {"K", 3}, {"iterations", 100}};
  const config::RunConfig cfg = config::run_config_from_json(base, dir.path());
  CHECK(cfg.manifest == dir.path() / "m.json");
  CHECK(cfg.burn_in == 50);
  CHECK(cfg.chains == 1);
  CHECK(cfg.standardize);
  CHECK(cfg.init == sampler::InitMethod::prior);
  CHECK_FALSE(cfg.d_sigma.has_value());

  auto rejects = [&](nlohmann::json doc, const std::string& needle) {
    try {
      config::run_config_from_json(doc, dir.path());
      FAIL("accepted: " << doc.dump());
    } catch (const ValidationError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  nlohmann::json doc = base;
  doc["colour"] = 1;
  rejects(doc, "colour");
  doc = base;
  doc["hyperparameters"] = {{"tau", 1.0}};
  rejects(doc, "tau");
  doc = base;
  doc["burn_in"] = 100;
  rejects(doc, "burn_in");
  doc = base;
  doc["init"] = "random";
  rejects(doc, "init");
  doc = base;
  doc.erase("K");
  rejects(doc, "'K'");
  doc = base;
  doc["K"] = "three";
  rejects(doc, "invalid run config");

  doc = base;
  doc["hyperparameters"] = {{"tau2", 2.0}, {"d_sigma", 0.5}, {"A", {{0.1, 0.2}, {0.3, 0.4}}}};
  doc["init"] = "spectral";
  const config::RunConfig full = config::run_config_from_json(doc, dir.path());
  CHECK(full.hyperparameters.tau2_load == 2.0);
  CHECK(full.d_sigma == 0.5);
  CHECK(full.hyperparameters.A(1, 0) == 0.3);
  const config::RunConfig again =
      config::run_config_from_json(nlohmann::json::parse(config::run_config_to_json(full).dump()), dir.path());
  CHECK(again.hyperparameters.tau2_load == 2.0);
  CHECK(again.init == sampler::InitMethod::spectral);
  CHECK(again.iterations == full.iterations);
  CHECK(again.burn_in == full.burn_in);
}

TEST_CASE("config: thread count resolution") {
  {
    EnvGuard env(nullptr);
    CHECK(config::resolve_threads(std::nullopt, 0) == 1);
    CHECK(config::resolve_threads(std::nullopt, 3) == 3);
    CHECK(config::resolve_threads(2, 3) == 2);
  }
  {
    EnvGuard env("4");
    CHECK(config::resolve_threads(std::nullopt, 3) == 4);
    CHECK(config::resolve_threads(2, 3) == 2);
  }
  {
    EnvGuard env("many");
    CHECK_THROWS_AS(config::resolve_threads(std::nullopt, 0), ValidationError);
  }
  CHECK_THROWS_AS(config::resolve_threads(0, 0), ValidationError);
}

TEST_CASE("draw store: binary layout and round trip") {
  TempDir dir("store");
  DrawSeries s("lambda", {2, 3});
  Rng rng(3);
  for (long sweep = 2; sweep <= 10; sweep += 2) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.normal();
    s.push(v, sweep);
  }
  store::write_series(dir / "lambda.bin", s, {10, 0, 2});
  const DrawSeries back = store::read_series(dir / "lambda.bin");
  CHECK(back.name() == "lambda");
  CHECK(back.shape() == s.shape());
  CHECK(back.values() == s.values());
  CHECK(back.sweeps() == s.sweeps());

  const std::string bytes = slurp(dir / "lambda.bin");
  const auto nl = bytes.find('\n');
  REQUIRE(nl != std::string::npos);
  const auto header = nlohmann::json::parse(bytes.substr(0, nl));
  CHECK(header.at("name") == "lambda");
  CHECK(bytes.size() - nl - 1 == s.values().size() * 8);
  // Little-endian float64: 1.0 is 00 .. f0 3f.
  store::write_array(dir / "one.bin", "one", {1}, std::vector<double>{1.0});
  const std::string one = slurp(dir / "one.bin");
  const std::string tail = one.substr(one.size() - 8);
  CHECK(static_cast<unsigned char>(tail[7]) == 0x3f);
  CHECK(static_cast<unsigned char>(tail[6]) == 0xf0);
  CHECK(tail[0] == 0);
  std::vector<std::size_t> shape;
  CHECK(store::read_array(dir / "one.bin", &shape) == std::vector<double>{1.0});
  CHECK(shape == std::vector<std::size_t>{1});

  store::write_series_csv(dir / "lambda.csv", s);
  const auto lines = lines_of(slurp(dir / "lambda.csv"));
  REQUIRE(lines.size() == 6);
  CHECK(lines[0].rfind("sweep,", 0) == 0);
  CHECK(std::count(lines[0].begin(), lines[0].end(), ',') == 6);
  CHECK(lines[1].rfind("2,", 0) == 0);

  spit(dir / "bad.bin", "not json\n");
  CHECK_THROWS_AS(store::read_series(dir / "bad.bin"), ValidationError);
}

TEST_CASE("cli: simulate is reproducible and validates fields") {
  TempDir dir("sim");
  spit(dir / "scenario.json", kScenario);
  const auto run_to = [&](const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"simulate", "--config", (dir / "scenario.json").string(), "--out",
                                  (dir / out).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  };
  REQUIRE(run_to("a").code == 0);
  REQUIRE(run_to("b").code == 0);
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename().string();
    CHECK_MESSAGE(slurp(entry.path()) == slurp(dir / "b" / name), name);
  }
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(fs::exists(dir / "a" / "truth.json"));
  CHECK(fs::exists(dir / "a" / "task_sub3.csv"));
  REQUIRE(run_to("c", {"--seed", "6"}).code == 0);
  CHECK(slurp(dir / "a" / "rest_sub1.csv") != slurp(dir / "c" / "rest_sub1.csv"));

  auto doc = nlohmann::json::parse(kScenario);
  doc["nonsparsity"] = 1.5;
  spit(dir / "scenario.json", doc.dump());
  const Invocation bad = run_to("d");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("nonsparsity") != std::string::npos);

  CHECK(invoke({"simulate", "--config", (dir / "missing.json").string()}).code == 2);
  CHECK(invoke({"unknown-verb"}).code == 2);
}

TEST_CASE("cli: fit, summarize and determinism") {
  TempDir dir("fit");
  const fs::path cfg = prepare_run(dir, R"(, "chains": 2)");
  const Invocation fit = invoke({"fit", "--config", cfg.string(), "--threads", "1"});
  REQUIRE_MESSAGE(fit.code == 0, fit.err);
  const fs::path out = dir / "fit";
  for (const char* f : {"metadata.json", "scores.json", "chain_0/lambda.bin", "chain_0/lambda.csv",
                        "chain_1/pi0.bin", "chain_0/trace.csv"})
    CHECK_MESSAGE(fs::exists(out / f), f);
  const auto meta = nlohmann::json::parse(slurp(out / "metadata.json"));
  CHECK(meta.at("seed") == 11);
  CHECK(meta.at("stored_draws_per_chain") == 20);
  CHECK(store::read_series(out / "chain_0" / "lambda.bin").size() == 20);
  CHECK(slurp(out / "chain_0" / "lambda.bin") != slurp(out / "chain_1" / "lambda.bin"));

  SUBCASE("same seed reproduces every chain at any thread count") {
    for (const char* threads : {"1", "2", "4"}) {
      const std::string again = (dir / (std::string("again_") + threads)).string();
      REQUIRE(invoke({"fit", "--config", cfg.string(), "--threads", threads, "--out", again}).code == 0);
      for (const char* f : {"chain_0/lambda.bin", "chain_1/lambda.bin", "chain_1/mu.bin", "chain_0/sigma2.bin"})
        CHECK_MESSAGE(slurp(out / f) == slurp(fs::path(again) / f), threads << " " << f);
    }
  }
  SUBCASE("environment thread count") {
    EnvGuard env("2");
    REQUIRE(invoke({"fit", "--config", cfg.string(), "--out", (dir / "env").string()}).code == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "env" / "metadata.json")).at("threads") == 2);
    CHECK(slurp(out / "chain_0/lambda.bin") == slurp(dir / "env" / "chain_0/lambda.bin"));
  }
  SUBCASE("a different seed changes the draws") {
    REQUIRE(invoke({"fit", "--config", cfg.string(), "--seed", "12", "--out", (dir / "s12").string()}).code == 0);
    CHECK(slurp(out / "chain_0/lambda.bin") != slurp(dir / "s12" / "chain_0/lambda.bin"));
  }
  SUBCASE("summarize") {
    const Invocation sum = invoke({"summarize", "--store", out.string(), "--threshold", "0.5"});
    REQUIRE_MESSAGE(sum.code == 0, sum.err);
    for (const char* f : {"lambda.csv", "pi0.csv", "group_map.csv", "sv.csv", "sigma2.csv", "summary.json",
                          "task_effects.csv"})
      CHECK_MESSAGE(fs::exists(out / "summary" / f), f);
    const auto lam = lines_of(slurp(out / "summary" / "lambda.csv"));
    CHECK(lam.size() == 1 + 3 * 4 * 2);
    CHECK(invoke({"summarize", "--store", out.string(), "--pool", "--out", (dir / "pooled").string()}).code == 0);
    CHECK(invoke({"summarize", "--store", out.string(), "--threshold", "1.5"}).code == 2);
    CHECK(invoke({"summarize", "--store", out.string(), "--estimator", "mode"}).code == 2);
    fs::create_directories(dir / "empty");
    const Invocation empty = invoke({"summarize", "--store", (dir / "empty").string()});
    CHECK(empty.code == 2);
    CHECK(empty.err.find("empty store") != std::string::npos);
  }
}

TEST_CASE("cli: regress") {
  TempDir dir("regress");
  const fs::path cfg = prepare_run(dir);
  REQUIRE(invoke({"fit", "--config", cfg.string()}).code == 0);
  spit(dir / "behavior.csv", "subject,score,flat\nsub1,1.0,2\nsub2,3.5,2\nsub3,-0.5,2\n");

  const Invocation ok = invoke({"regress", "--store", (dir / "fit").string(), "--behavior",
                                (dir / "behavior.csv").string(), "--measure", "flat", "--task", "task",
                                "--iterations", "400", "--burn-in", "100", "--out", (dir / "reg").string()});
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  const auto rows = lines_of(slurp(dir / "reg" / "regression.csv"));
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> cells;
    std::istringstream in(rows[i]);
    for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
    CHECK(cells.at(5) == "0");
  }
  CHECK(lines_of(slurp(dir / "reg" / "task_effects.csv")).size() == 1 + 3 * 2);

  const Invocation unknown = invoke({"regress", "--store", (dir / "fit").string(), "--behavior",
                                     (dir / "behavior.csv").string(), "--measure", "missing", "--task", "task"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("missing") != std::string::npos);
  CHECK(invoke({"regress", "--store", (dir / "fit").string(), "--behavior", (dir / "behavior.csv").string(),
                "--measure", "score", "--task", "rest"})
            .code == 2);

  // Same data without a designated rest condition.
  auto manifest = nlohmann::json::parse(slurp(dir / "data" / "manifest.json"));
  manifest["rest_condition"] = nullptr;
  spit(dir / "data" / "manifest.json", manifest.dump());
  REQUIRE(invoke({"fit", "--config", cfg.string(), "--out", (dir / "norest").string()}).code == 0);
  const Invocation norest = invoke({"regress", "--store", (dir / "norest").string(), "--behavior",
                                    (dir / "behavior.csv").string(), "--measure", "score", "--task", "task"});
  CHECK(norest.code == 2);
  CHECK(norest.err.find("task effects require rest") != std::string::npos);
}

TEST_CASE("cli: select-k") {
  TempDir dir("selectk");
  const fs::path cfg = prepare_run(dir);
  const Invocation one = invoke({"select-k", "--config", cfg.string(), "--k", "2"});
  REQUIRE_MESSAGE(one.code == 0, one.err);
  const auto rows = lines_of(slurp(dir / "fit" / "scores.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].rfind("2,", 0) == 0);

  const Invocation two = invoke({"select-k", "--config", cfg.string(), "--k", "1,2", "--pick", "elbow"});
  REQUIRE(two.code == 0);
  CHECK(lines_of(slurp(dir / "fit" / "scores.csv")).size() == 3);
  CHECK(two.out.find("elbow K = ") != std::string::npos);

  const Invocation too_many = invoke({"select-k", "--config", cfg.string(), "--k", "2,4"});
  CHECK(too_many.code == 2);
  CHECK(too_many.err.find("K < N") != std::string::npos);
}

TEST_CASE("cli: compare") {
  TempDir dir("compare");
  spit(dir / "a.csv", "1,0,0\n1,0,0\n0,1,0\n0,1,1\n0,0,1\n");
  spit(dir / "b.csv", "0,0,1\n0,0,1\n1,0,0\n1,1,0\n0,1,0\n");
  spit(dir / "c.csv", "0,0,0\n0,0,0\n0,0,0\n0,0,0\n0,0,0\n1,1,1\n");
  spit(dir / "a6.csv", "1,0,0\n1,0,0\n0,1,0\n0,1,1\n0,0,1\n0,0,0\n");
  spit(dir / "d.csv", "1,0\n0,1\n");

  const Invocation self = invoke({"compare", "--a", (dir / "a.csv").string(), "--b", (dir / "a.csv").string()});
  REQUIRE(self.code == 0);
  CHECK(any_contains(lines_of(self.out), "mean Jaccard similarity: 1.0000±0.0000"));

  const Invocation perm = invoke({"compare", "--a", (dir / "a.csv").string(), "--b", (dir / "b.csv").string(),
                                  "--out", (dir / "cmp").string()});
  REQUIRE(perm.code == 0);
  CHECK(any_contains(lines_of(perm.out), "mean Jaccard similarity: 1.0000±0.0000"));
  const auto rows = lines_of(slurp(dir / "cmp" / "compare.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[1] == "1,3,1");

  const Invocation disjoint = invoke({"compare", "--a", (dir / "a6.csv").string(), "--b", (dir / "c.csv").string()});
  REQUIRE(disjoint.code == 0);
  CHECK(any_contains(lines_of(disjoint.out), "mean Jaccard similarity: 0.0000±0.0000"));
  CHECK(invoke({"compare", "--a", (dir / "a.csv").string(), "--b", (dir / "c.csv").string()}).code == 2);
  const Invocation shape = invoke({"compare", "--a", (dir / "a.csv").string(), "--b", (dir / "d.csv").string()});
  CHECK(shape.code == 2);
}
