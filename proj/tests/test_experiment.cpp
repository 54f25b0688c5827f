#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bts/config_io.hpp"
#include "bts/experiment.hpp"

using bts::ExperimentConfig;

namespace {

ExperimentConfig bernoulli_config(bts::PolicySpec policy, std::uint64_t horizon, std::uint64_t runs,
                                  std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.id = "test";
  c.policy = policy;
  c.env = bts::BernoulliSpec{10, 0.1, 0};
  c.horizon = horizon;
  c.runs = runs;
  c.seed = seed;
  c.checkpoints = bts::default_checkpoints(horizon);
  return c;
}

}  // namespace

TEST_CASE("default checkpoints", "[experiment][checkpoints]") {
  CHECK(bts::default_checkpoints(1) == std::vector<std::uint64_t>{1});
  CHECK(bts::default_checkpoints(7) == std::vector<std::uint64_t>{1, 2, 5, 7});
  CHECK(bts::default_checkpoints(100) == std::vector<std::uint64_t>{1, 2, 5, 10, 20, 50, 100});
  const auto big = bts::default_checkpoints(100'000);
  CHECK(big.size() == 16);
  CHECK(big.back() == 100'000);
}

TEST_CASE("an oracle policy accrues no regret", "[experiment][episode]") {
  auto c = bernoulli_config(bts::FixedArmSpec{}, 5000, 1);
  const auto trace = bts::run_episode(c, 0);
  REQUIRE(trace.checkpoints.size() == c.checkpoints.size());
  for (const auto& p : trace.checkpoints) CHECK(p.cum_regret == 0.0);

  ExperimentConfig f;
  f.policy = bts::FixedArmSpec{};
  f.env = bts::FactorialSpec{4.0};
  f.horizon = 2000;
  f.checkpoints = bts::default_checkpoints(2000);
  for (const auto& p : bts::run_episode(f, 3).checkpoints) CHECK(p.cum_regret == 0.0);
}

TEST_CASE("a fixed suboptimal arm accrues epsilon per step", "[experiment][episode][statistical]") {
  auto c = bernoulli_config(bts::FixedArmSpec{3}, 10'000, 1, 7);
  const auto trace = bts::run_episode(c, 0);
  // increments are Bernoulli(0.1): mean 1000, sd 30
  CHECK(std::abs(trace.checkpoints.back().cum_regret - 1000.0) <= 100.0);
}

TEST_CASE("run_episode is deterministic", "[experiment][episode]") {
  for (const bts::PolicySpec p : {bts::PolicySpec{bts::BetaTsSpec{}}, bts::PolicySpec{bts::BtsSpec{50}},
                                  bts::PolicySpec{bts::BtsInfSpec{}}}) {
    const auto c = bernoulli_config(p, 3000, 1, 99);
    CHECK(bts::run_episode(c, 4) == bts::run_episode(c, 4));
    CHECK_FALSE(bts::run_episode(c, 4) == bts::run_episode(c, 5));
  }
  ExperimentConfig f;
  f.policy = bts::LinearBtsSpec{20, 1.0};
  f.env = bts::FactorialSpec{1.0};
  f.horizon = 500;
  f.checkpoints = bts::default_checkpoints(500);
  CHECK(bts::run_episode(f, 0) == bts::run_episode(f, 0));
}

TEST_CASE("bernoulli regret is non-decreasing and checkpoints replay", "[experiment][episode][property]") {
  auto c = bernoulli_config(bts::BtsSpec{30}, 2000, 1, 5);
  c.checkpoints = bts::every_step(2000);
  double reward = 0.0;
  double regret = 0.0;
  std::vector<bts::TracePoint> replay;
  const bts::StepObserver obs = [&](const bts::StepRecord& s) {
    reward += s.reward;
    regret += s.counterfactual_optimal - s.reward;
    replay.push_back({s.t, regret, reward});
  };
  const auto trace = bts::run_episode(c, 2, &obs);
  REQUIRE(trace.checkpoints == replay);
  for (std::size_t i = 1; i < trace.checkpoints.size(); ++i) {
    const double inc = trace.checkpoints[i].cum_regret - trace.checkpoints[i - 1].cum_regret;
    REQUIRE((inc == 0.0 || inc == 1.0));
  }
}

TEST_CASE("run_experiment does not depend on the worker count", "[experiment][parallel]") {
  const auto c = bernoulli_config(bts::BtsSpec{20}, 1000, 24, 11);
  const auto one = bts::run_experiment(c, 1);
  const auto four = bts::run_experiment(c, 4);
  const auto sixteen = bts::run_experiment(c, 16);
  CHECK(one.traces == four.traces);
  CHECK(one.traces == sixteen.traces);
  CHECK(one.regret == four.regret);
  CHECK(one.regret == sixteen.regret);
}

TEST_CASE("aggregate", "[experiment][aggregate]") {
  const std::vector<std::uint64_t> cps{1, 2};
  const auto single = bts::aggregate(cps, {{3.0, 4.0}});
  CHECK(single.points[1].mean == 4.0);
  CHECK_FALSE(single.points[1].ci_low.has_value());
  CHECK(single.points[1].n_runs == 1);

  const std::vector<std::vector<double>> constant(100, std::vector<double>{2.5, 7.0});
  const auto flat = bts::aggregate(cps, constant);
  for (const auto& p : flat.points) {
    REQUIRE(p.ci_low.has_value());
    CHECK(*p.ci_high - *p.ci_low == 0.0);
  }
}

TEST_CASE("aggregate mean and interval match a naive recomputation", "[experiment][aggregate][statistical]") {
  const auto r = bts::run_experiment(bernoulli_config(bts::BetaTsSpec{}, 2000, 37, 3), 1);
  for (std::size_t c = 0; c < r.config.checkpoints.size(); ++c) {
    double s = 0.0;
    for (const auto& tr : r.traces) s += tr.checkpoints[c].cum_regret;
    const double mean = s / 37.0;
    double ss = 0.0;
    for (const auto& tr : r.traces) ss += std::pow(tr.checkpoints[c].cum_regret - mean, 2);
    const double half = 1.96 * std::sqrt(ss / 36.0 / 37.0);
    const auto& p = r.regret.points[c];
    CHECK(std::abs(p.mean - mean) <= 1e-12 * std::max(1.0, mean));
    CHECK(std::abs(*p.ci_low - (mean - half)) <= 1e-9);
    CHECK(*p.ci_low <= p.mean);
    CHECK(p.mean <= *p.ci_high);
  }
}

TEST_CASE("paired self-comparison is identically zero", "[experiment][paired]") {
  const auto c = bernoulli_config(bts::BtsSpec{40}, 3000, 8, 21);
  const auto r = bts::run_paired_comparison(c, c, 2);
  for (const auto& p : r.difference.points) {
    CHECK(p.mean == 0.0);
    CHECK(*p.ci_low == 0.0);
    CHECK(*p.ci_high == 0.0);
  }
}

TEST_CASE("paired runs share the environment draws", "[experiment][paired][property]") {
  // Both fixed policies play the optimal arm, so the rewards coincide only
  // if the per-step base draw is shared.
  auto a = bernoulli_config(bts::FixedArmSpec{}, 2000, 4, 8);
  auto b = bernoulli_config(bts::FixedArmSpec{0}, 2000, 4, 8);
  const auto r = bts::run_paired_comparison(a, b, 1);
  for (const auto& p : r.difference.points) CHECK(p.mean == 0.0);

  auto mismatched = b;
  mismatched.horizon = 1000;
  mismatched.checkpoints = bts::default_checkpoints(1000);
  REQUIRE_THROWS_AS(bts::run_paired_comparison(a, mismatched), bts::ConfigError);
  auto other_env = b;
  other_env.env = bts::BernoulliSpec{5, 0.1, 0};
  REQUIRE_THROWS_AS(bts::run_paired_comparison(a, other_env), bts::ConfigError);
}

TEST_CASE("config validation", "[experiment][config]") {
  auto mismatch = bernoulli_config(bts::LinearBtsSpec{}, 10, 1);
  REQUIRE_THROWS_AS(bts::run_episode(mismatch, 0), bts::ConfigError);
  ExperimentConfig lin;
  lin.policy = bts::BetaTsSpec{};
  lin.env = bts::FactorialSpec{1.0};
  REQUIRE_THROWS_AS(bts::validate(lin), bts::ConfigError);

  auto bad = bernoulli_config(bts::BetaTsSpec{}, 10, 1);
  bad.checkpoints = {1, 5, 5};
  REQUIRE_THROWS_AS(bts::validate(bad), bts::ConfigError);
  bad.checkpoints = {11};
  REQUIRE_THROWS_AS(bts::validate(bad), bts::ConfigError);
  bad.checkpoints = {};
  bad.runs = 0;
  REQUIRE_THROWS_AS(bts::validate(bad), bts::ConfigError);
  auto zero_j = bernoulli_config(bts::BtsSpec{0}, 10, 1);
  REQUIRE_THROWS_AS(bts::validate(zero_j), bts::ConfigError);
  auto arm = bernoulli_config(bts::FixedArmSpec{10}, 10, 1);
  REQUIRE_THROWS_AS(bts::validate(arm), bts::ConfigError);
}

TEST_CASE("presets", "[experiment][presets]") {
  const bts::PresetParams params;
  const auto fig2 = bts::preset("fig2-bernoulli", params, bts::Scale::paper);
  REQUIRE(fig2.size() == 3);
  for (const auto& c : fig2) {
    CHECK(c.horizon == 1'000'000);
    CHECK(c.runs == 1000);
  }
  CHECK(std::get<bts::BtsSpec>(fig2[1].policy).replicates == 1000);

  const auto fig4 = bts::preset("fig4-factorial", params, bts::Scale::paper);
  REQUIRE(fig4.size() == 2);
  const auto lin = std::get<bts::LinearBtsSpec>(fig4[0].policy);
  CHECK(lin.replicates == 1000);
  CHECK(lin.lambda == 1.0);
  CHECK(fig4[0].horizon == 10'000);
  CHECK(fig4[0].runs == 100);
  CHECK(std::get<bts::FactorialSpec>(fig4[0].env).gamma == 1.0);

  const auto sweep = bts::preset("fig3-jsweep", params, bts::Scale::desk);
  REQUIRE(sweep.size() == 5);
  std::vector<std::size_t> js;
  for (const auto& c : sweep) {
    CHECK(c.horizon == 100'000);
    CHECK(c.env == sweep[0].env);
    CHECK(c.runs == sweep[0].runs);
    CHECK(c.seed == sweep[0].seed);
    if (const auto* b = std::get_if<bts::BtsSpec>(&c.policy)) js.push_back(b->replicates);
  }
  CHECK(js == std::vector<std::size_t>{10, 100, 1000, 10000});
  CHECK(std::holds_alternative<bts::BtsInfSpec>(sweep.back().policy));

  REQUIRE_THROWS_WITH(bts::preset("fig9", params, bts::Scale::desk),
                      Catch::Matchers::ContainsSubstring("fig2-bernoulli") &&
                          Catch::Matchers::ContainsSubstring("fig4-factorial"));
}

TEST_CASE("config json round trip and policy spec parsing", "[experiment][config]") {
  auto c = bernoulli_config(bts::BtsSpec{250, 2.0, 3.0, bts::WeightScheme::poisson}, 1234, 7, 42);
  c.checkpoints = {1, 10, 1234};
  const auto back = bts::config_from_json(bts::to_json(c));
  CHECK(back.id == c.id);
  CHECK(back.policy == c.policy);
  CHECK(back.env == c.env);
  CHECK(back.horizon == c.horizon);
  CHECK(back.runs == c.runs);
  CHECK(back.seed == c.seed);
  CHECK(back.checkpoints == c.checkpoints);

  CHECK(bts::parse_policy_spec("bts:J=10") == bts::PolicySpec{bts::BtsSpec{10}});
  CHECK(bts::parse_policy_spec("linear-bts:J=5,lambda=0.5") == bts::PolicySpec{bts::LinearBtsSpec{5, 0.5}});
  CHECK(bts::parse_policy_spec("beta-ts") == bts::PolicySpec{bts::BetaTsSpec{}});
  REQUIRE_THROWS_AS(bts::parse_policy_spec("bts:J=ten"), bts::ConfigError);
  REQUIRE_THROWS_AS(bts::parse_policy_spec("ucb"), bts::ConfigError);
  REQUIRE_THROWS_AS(bts::parse_policy_spec("bts:depth=3"), bts::ConfigError);
}
