#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bts/results_io.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bts_results_io_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Mini-experiment behind the committed golden files. Only integer and
// uniform draws are involved, so the output is platform independent.
bts::ExperimentConfig golden_config() {
  bts::ExperimentConfig c;
  c.id = "golden";
  c.policy = bts::BtsSpec{10};
  c.env = bts::BernoulliSpec{3, 0.2, 0};
  c.horizon = 200;
  c.runs = 3;
  c.seed = 7;
  c.checkpoints = bts::default_checkpoints(200);
  return c;
}

}  // namespace

TEST_CASE("csv round trip is lossless", "[io]") {
  auto c = golden_config();
  c.policy = bts::BetaTsSpec{};
  c.runs = 5;
  const auto result = bts::run_experiment(c, 1);
  const auto dir = scratch_dir("roundtrip");
  bts::write_results({bts::make_entry(result)}, bts::OutputFormat::csv, dir);

  const auto rows = bts::read_aggregates_csv(dir / "aggregates.csv");
  REQUIRE(rows.size() == result.regret.points.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].experiment_id == "golden");
    CHECK(rows[i].policy == "beta-ts");
    CHECK(rows[i].env == "bernoulli");
    CHECK(rows[i].param_json == bts::param_json(c));
    CHECK(rows[i].point == result.regret.points[i]);
  }
  const auto traces = bts::read_traces_csv(dir / "traces.csv");
  REQUIRE(traces.size() == 5 * c.checkpoints.size());
  std::size_t k = 0;
  for (const auto& tr : result.traces) {
    for (const auto& p : tr.checkpoints) {
      CHECK(traces[k].run == tr.run_index);
      CHECK(traces[k].point == p);
      ++k;
    }
  }
}

TEST_CASE("awkward reals survive the round trip", "[io]") {
  bts::ResultEntry e;
  e.experiment_id = "id,with \"quotes\"";
  e.policy = "p";
  e.env = "e";
  e.param_json = R"({"a":1,"b":"x"})";
  for (const double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.123456789}) {
    e.curve.points.push_back({1, v, v - 1.0, v + 1.0, 2});
  }
  const auto dir = scratch_dir("reals");
  bts::write_aggregates_csv({e}, dir / "a.csv");
  const auto rows = bts::read_aggregates_csv(dir / "a.csv");
  REQUIRE(rows.size() == e.curve.points.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].experiment_id == e.experiment_id);
    CHECK(rows[i].param_json == e.param_json);
    CHECK(rows[i].point == e.curve.points[i]);
  }
}

TEST_CASE("single-run aggregates have empty interval fields", "[io]") {
  auto c = golden_config();
  c.runs = 1;
  const auto result = bts::run_experiment(c, 1);
  const auto dir = scratch_dir("single");
  bts::write_results({bts::make_entry(result)}, bts::OutputFormat::csv, dir);
  for (const auto& r : bts::read_aggregates_csv(dir / "aggregates.csv")) {
    CHECK_FALSE(r.point.ci_low.has_value());
    CHECK(r.point.n_runs == 1);
  }
  const auto j = bts::results_to_json({bts::make_entry(result)});
  const auto& a = j["experiments"][0]["aggregates"][0];
  CHECK(a["ci_low"].is_null());
  CHECK(a["single_run"] == true);
}

TEST_CASE("empty checkpoint list gives header-only files", "[io]") {
  auto c = golden_config();
  c.checkpoints.clear();
  const auto result = bts::run_experiment(c, 1);
  const auto dir = scratch_dir("empty");
  bts::write_results({bts::make_entry(result)}, bts::OutputFormat::csv, dir);
  CHECK(slurp(dir / "aggregates.csv") == std::string(bts::kAggregateHeader) + "\n");
  CHECK(slurp(dir / "traces.csv") == std::string(bts::kTraceHeader) + "\n");
}

TEST_CASE("json output mirrors the csv fields", "[io]") {
  const auto result = bts::run_experiment(golden_config(), 1);
  const auto dir = scratch_dir("json");
  bts::write_results({bts::make_entry(result)}, bts::OutputFormat::json, dir);
  const auto j = bts::Json::parse(slurp(dir / "results.json"));
  const auto& x = j["experiments"][0];
  CHECK(x["experiment_id"] == "golden");
  CHECK(x["policy"] == "bts");
  CHECK(x["param_json"] == bts::param_json(golden_config()));
  REQUIRE(x["aggregates"].size() == result.regret.points.size());
  for (std::size_t i = 0; i < result.regret.points.size(); ++i) {
    CHECK(x["aggregates"][i]["mean"].get<double>() == result.regret.points[i].mean);
    CHECK(x["aggregates"][i]["ci_high"].get<double>() == *result.regret.points[i].ci_high);
  }
  CHECK(x["traces"].size() == 3 * golden_config().checkpoints.size());
}

TEST_CASE("golden mini-experiment output", "[io][golden]") {
  const auto result = bts::run_experiment(golden_config(), 2);
  const auto dir = scratch_dir("golden");
  bts::write_results({bts::make_entry(result)}, bts::OutputFormat::csv, dir);
  const fs::path golden(BTS_GOLDEN_DIR);
  CHECK(slurp(dir / "aggregates.csv") == slurp(golden / "aggregates.csv"));
  CHECK(slurp(dir / "traces.csv") == slurp(golden / "traces.csv"));
}

TEST_CASE("unwritable output path reports the path", "[io]") {
  const auto dir = scratch_dir("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  const auto target = dir / "file" / "sub";
  bts::ResultEntry e;
  REQUIRE_THROWS_MATCHES(bts::write_results({e}, bts::OutputFormat::csv, target), bts::IoError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("file/sub")));
}
