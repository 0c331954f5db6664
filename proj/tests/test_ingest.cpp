#include "bicnet/ingest.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace bicnet;
using testing::TempDir;

namespace {

void write_series(const std::filesystem::path& p, int T, int N, double offset) {
  Matrix m(T, N);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n) m(t, n) = offset + std::sin(0.3 * t + n) + 0.01 * n * t;
  ingest::write_csv_matrix(p, m);
}

}  // namespace

TEST_CASE("load_dataset: two subjects, two conditions") {
  TempDir dir("ingest");
  std::vector<std::vector<std::string>> files(2);
  for (int g = 0; g < 2; ++g)
    for (int s = 0; s < 2; ++s) {
      const std::string name = "c" + std::to_string(g) + "_s" + std::to_string(s) + ".csv";
      write_series(dir / name, 7 + g, 6, g + s);
      files[g].push_back(name);
    }
  ingest::write_manifest(dir / "manifest.json", {"rest", "story"}, {"s0", "s1"}, files, true);
  const Dataset data = ingest::load_dataset(dir / "manifest.json");
  CHECK(data.subjects() == 2);
  CHECK(data.conditions() == 2);
  CHECK(data.regions() == 6);
  CHECK(data.y[1][0].cols() == 8);
  CHECK(data.condition_names[0] == "rest");
  CHECK(data.has_rest);
  // Regions along rows after loading.
  const Matrix raw = ingest::read_csv_matrix(dir / files[1][1]);
  CHECK(data.y[1][1].isApprox(raw.transpose()));
}

TEST_CASE("load_dataset puts the rest condition first") {
  TempDir dir("ingest_order");
  write_series(dir / "a.csv", 5, 3, 0);
  write_series(dir / "b.csv", 5, 3, 1);
  nlohmann::ordered_json m;
  m["task"]["s0"] = "a.csv";
  m["baseline"]["s0"] = "b.csv";
  m["rest_condition"] = "baseline";
  testing::spit(dir / "m.json", m.dump());
  const Dataset data = ingest::load_dataset(dir / "m.json");
  CHECK(data.condition_names == std::vector<std::string>{"baseline", "task"});
  CHECK(data.y[0][0](0, 0) == doctest::Approx(1.0 + std::sin(0.0)));
}

TEST_CASE("load_dataset validation errors") {
  TempDir dir("ingest_err");
  write_series(dir / "six.csv", 5, 6, 0);
  write_series(dir / "five.csv", 5, 5, 0);

  SUBCASE("region count mismatch") {
    ingest::write_manifest(dir / "m.json", {"rest"}, {"a", "b"}, {{"six.csv", "five.csv"}}, true);
    CHECK_THROWS_WITH_AS(ingest::load_dataset(dir / "m.json"), "region count mismatch", ValidationError);
  }
  SUBCASE("empty manifest") {
    testing::spit(dir / "m.json", "{}");
    CHECK_THROWS_WITH_AS(ingest::load_dataset(dir / "m.json"), "no series listed", ValidationError);
  }
  SUBCASE("missing file") {
    ingest::write_manifest(dir / "m.json", {"rest"}, {"a"}, {{"nope.csv"}}, true);
    CHECK_THROWS_AS(ingest::load_dataset(dir / "m.json"), ValidationError);
  }
  SUBCASE("non-numeric cell") {
    testing::spit(dir / "bad.csv", "1,2\n3,x\n");
    ingest::write_manifest(dir / "m.json", {"rest"}, {"a"}, {{"bad.csv"}}, true);
    CHECK_THROWS_AS(ingest::load_dataset(dir / "m.json"), ValidationError);
  }
  SUBCASE("ragged rows") {
    testing::spit(dir / "bad.csv", "1,2\n3\n");
    CHECK_THROWS_AS(ingest::read_csv_matrix(dir / "bad.csv"), ValidationError);
  }
}

TEST_CASE("csv writer round-trips doubles exactly") {
  TempDir dir("csv");
  Rng rng(5);
  Matrix m = testing::random_matrix(9, 4, rng, 1e3);
  m(0, 0) = 1.0 / 3.0;
  m(1, 1) = -0.0;
  m(2, 2) = 1e-300;
  ingest::write_csv_matrix(dir / "m.csv", m);
  CHECK(ingest::read_csv_matrix(dir / "m.csv") == m);
  ingest::write_csv_matrix(dir / "n.csv", m);
  CHECK(testing::slurp(dir / "m.csv") == testing::slurp(dir / "n.csv"));
}

TEST_CASE("center_scale examples") {
  Matrix row(1, 3);
  row << 1, 2, 3;
  Matrix expected(1, 3);
  expected << -1, 0, 1;
  CHECK(ingest::center_scale(row).isApprox(expected, 1e-15));

  Rng rng(2);
  Matrix x = testing::random_matrix(6, 100, rng, 3.0).array() + 2.0;
  const Matrix z = ingest::center_scale(x);
  for (int n = 0; n < 6; ++n) {
    CHECK(std::abs(z.row(n).mean()) < 1e-12);
    const double sd = std::sqrt((z.row(n).array() - z.row(n).mean()).square().sum() / 99.0);
    CHECK(std::abs(sd - 1.0) < 1e-12);
  }
  CHECK((ingest::center_scale(z) - z).cwiseAbs().maxCoeff() < 1e-10);

  Matrix flat = Matrix::Ones(2, 4);
  flat.row(0) << 1, 2, 3, 4;
  CHECK_THROWS_WITH_AS(ingest::center_scale(flat), "constant series in region 1", ValidationError);
}

TEST_CASE("aggregate_rois averages member voxels") {
  Matrix v(3, 4);
  v << 0, 0, 0, 0,
       2, 2, 2, 2,
       5, 6, 7, 8;
  Matrix r = ingest::aggregate_rois(v, {1, 1, 2}, 2);
  CHECK(r.row(0).isApprox(Eigen::RowVectorXd::Ones(4)));
  CHECK(r.row(1).isApprox(v.row(2)));

  Matrix same(2, 3);
  same << 1, 4, 9, 1, 4, 9;
  CHECK(ingest::aggregate_rois(same, {1, 1}, 1).row(0).isApprox(same.row(0)));
  CHECK_THROWS_AS(ingest::aggregate_rois(v, {1, 1, 1}, 2), ValidationError);
}

TEST_CASE("behavioral table lookup follows subject order") {
  TempDir dir("behavior");
  testing::spit(dir / "b.csv", "subject,reading,vocab\ns1,1.5,10\ns0,2.5,20\n");
  const auto table = ingest::load_behavior(dir / "b.csv");
  const Vector v = table.measure("vocab", {"s0", "s1"});
  CHECK(v[0] == 20.0);
  CHECK(v[1] == 10.0);
  CHECK_THROWS_AS(table.measure("missing", {"s0"}), ValidationError);
  CHECK_THROWS_AS(table.measure("vocab", {"s9"}), ValidationError);
}
