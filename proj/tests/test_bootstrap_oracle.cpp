#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "bts/bernoulli_policies.hpp"
#include "bts/bootstrap_oracle.hpp"

namespace oracle = bts::oracle;
using oracle::EstimatorMode;

namespace {

void check_pmf(const oracle::DiscretePmf& pmf, double tol) {
  REQUIRE(pmf.support.size() == pmf.probs.size());
  REQUIRE(pmf.size() > 0);
  CHECK(std::abs(pmf.total() - 1.0) <= tol);
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    REQUIRE(pmf.probs[k] >= 0.0);
    REQUIRE(pmf.support[k] >= 0.0);
    REQUIRE(pmf.support[k] <= 1.0);
    if (k > 0) REQUIRE(pmf.support[k] > pmf.support[k - 1]);
  }
}

double prob_at(const oracle::DiscretePmf& pmf, double value) {
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    if (std::abs(pmf.support[k] - value) <= 1e-12) return pmf.probs[k];
  }
  return 0.0;
}

// TV distance between a pmf and an empirical histogram keyed by value.
double tv_against(const oracle::DiscretePmf& pmf, const std::map<double, double>& empirical) {
  double tv = 0.0;
  double matched = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    double q = 0.0;
    const auto it = empirical.lower_bound(pmf.support[k] - 1e-12);
    if (it != empirical.end() && std::abs(it->first - pmf.support[k]) <= 1e-12) q = it->second;
    matched += q;
    tv += std::abs(pmf.probs[k] - q);
  }
  tv += 1.0 - matched;  // empirical mass outside the support
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("donb_pmf_fixed_data examples", "[oracle]") {
  const auto single = oracle::donb_pmf_fixed_data(1, 0, EstimatorMode::pure_mean());
  REQUIRE(single.size() == 1);
  CHECK(single.support[0] == 1.0);
  CHECK(single.probs[0] == Catch::Approx(1.0).margin(1e-15));

  const auto pair = oracle::donb_pmf_fixed_data(1, 1, EstimatorMode::pure_mean());
  REQUIRE(pair.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(pair.support[k] == 0.5 * static_cast<double>(k));
    CHECK(pair.probs[k] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  }

  // patterns (0,0) -> 1/2, (1,0) -> 2/3, (0,1) -> 1/3, (1,1) -> 1/2
  const auto prior = oracle::donb_pmf_fixed_data(1, 1, EstimatorMode::prior_regularized(1, 1));
  REQUIRE(prior.size() == 3);
  CHECK(prior.support[0] == Catch::Approx(1.0 / 3.0).margin(1e-15));
  CHECK(prior.support[1] == 0.5);
  CHECK(prior.support[2] == Catch::Approx(2.0 / 3.0).margin(1e-15));
  CHECK(prior.probs[0] == Catch::Approx(0.25).margin(1e-15));
  CHECK(prior.probs[1] == Catch::Approx(0.5).margin(1e-15));
  CHECK(prior.probs[2] == Catch::Approx(0.25).margin(1e-15));

  REQUIRE_THROWS_WITH(oracle::donb_pmf_fixed_data(0, 0, EstimatorMode::pure_mean()), "no data");
  REQUIRE_THROWS_AS(oracle::donb_pmf_fixed_data(200, 57, EstimatorMode::pure_mean()), bts::ConfigError);
  REQUIRE_THROWS_AS(EstimatorMode::prior_regularized(0.0, 1.0), bts::ConfigError);
}

TEST_CASE("expected_donb_pmf examples", "[oracle]") {
  const auto n1 = oracle::expected_donb_pmf(1, 0.1, EstimatorMode::pure_mean());
  REQUIRE(n1.size() == 2);
  CHECK(prob_at(n1, 0.0) == Catch::Approx(0.9).margin(1e-14));
  CHECK(prob_at(n1, 1.0) == Catch::Approx(0.1).margin(1e-14));

  const auto n2 = oracle::expected_donb_pmf(2, 0.5, EstimatorMode::pure_mean());
  REQUIRE(n2.size() == 3);
  CHECK(prob_at(n2, 0.5) == Catch::Approx(1.0 / 6.0).margin(1e-14));
  CHECK(prob_at(n2, 1.0) == Catch::Approx(5.0 / 12.0).margin(1e-14));
  CHECK(prob_at(n2, 0.0) == Catch::Approx(5.0 / 12.0).margin(1e-14));

  const auto n128 = oracle::expected_donb_pmf(128, 0.5, EstimatorMode::pure_mean());
  CHECK(std::abs(n128.mean() - 0.5) <= 1e-12);

  REQUIRE_THROWS_AS(oracle::expected_donb_pmf(257, 0.5, EstimatorMode::pure_mean()), bts::ConfigError);
  REQUIRE_THROWS_AS(oracle::expected_donb_pmf(0, 0.5, EstimatorMode::pure_mean()), bts::ConfigError);
  REQUIRE_NOTHROW(oracle::expected_donb_pmf(256, 0.3, EstimatorMode::pure_mean()));
}

TEST_CASE("every pmf is a valid distribution on [0, 1]", "[oracle][property]") {
  for (const auto mode : {EstimatorMode::pure_mean(), EstimatorMode::prior_regularized(1, 1),
                          EstimatorMode::prior_regularized(0.5, 2.0)}) {
    for (const std::uint64_t n : {1, 2, 3, 8, 32, 77, 128}) {
      for (const double theta : {0.01, 0.1, 0.5, 0.9}) {
        check_pmf(oracle::expected_donb_pmf(n, theta, mode), 1e-10);
      }
    }
    for (std::uint64_t s = 0; s <= 12; ++s) {
      for (std::uint64_t f = 0; f <= 12; ++f) {
        if (s + f > 0) check_pmf(oracle::donb_pmf_fixed_data(s, f, mode), 1e-12);
      }
    }
  }
}

TEST_CASE("expected pmf mean agrees with Monte Carlo", "[oracle][statistical]") {
  const std::uint64_t n = 8;
  const double theta = 0.1;
  const auto pmf = oracle::expected_donb_pmf(n, theta, EstimatorMode::pure_mean());

  bts::Stream rng(77);
  const std::uint64_t draws = 10'000'000;
  double sum = 0.0, sum_sq = 0.0;
  std::uint64_t kept = 0;
  while (kept < draws) {
    const auto s = rng.binomial(n, theta);
    const auto ss = rng.binomial(s, 0.5);
    const auto fs = rng.binomial(n - s, 0.5);
    if (ss + fs == 0) continue;  // condition on a nonempty resample
    const double v = static_cast<double>(ss) / static_cast<double>(ss + fs);
    sum += v;
    sum_sq += v * v;
    ++kept;
  }
  const double mean = sum / static_cast<double>(draws);
  const double se = std::sqrt((sum_sq / static_cast<double>(draws) - mean * mean) / static_cast<double>(draws));
  CHECK(std::abs(pmf.mean() - mean) <= 3.0 * se);
}

TEST_CASE("expected pmf matches a Monte Carlo histogram in TV", "[oracle][statistical]") {
  const std::uint64_t n = 8;
  const double theta = 0.1;
  const auto pmf = oracle::expected_donb_pmf(n, theta, EstimatorMode::pure_mean());
  bts::Stream rng(78);
  const int draws = 1'000'000;
  std::map<double, double> hist;
  int kept = 0;
  while (kept < draws) {
    const auto s = rng.binomial(n, theta);
    const auto ss = rng.binomial(s, 0.5);
    const auto fs = rng.binomial(n - s, 0.5);
    if (ss + fs == 0) continue;
    hist[static_cast<double>(ss) / static_cast<double>(ss + fs)] += 1.0 / draws;
    ++kept;
  }
  CHECK(tv_against(pmf, hist) <= 0.005);
}

TEST_CASE("prior-regularized pmf reproduces the replicate bank", "[oracle][statistical]") {
  // s successes and f failures fed through the bank; each replicate's
  // estimate is one draw from the fixed-data distribution.
  const std::uint64_t s = 3, f = 4;
  const std::size_t replicates = 200'000;
  bts::ReplicateBank bank(1, replicates);
  const bts::ReplicateWeightSource src({5, 0, bts::StreamRole::replicate_weights});
  std::uint64_t t = 0;
  for (std::uint64_t i = 0; i < s; ++i) bts::bts_update(bank, bts::ArmId{0}, 1.0, src, ++t);
  for (std::uint64_t i = 0; i < f; ++i) bts::bts_update(bank, bts::ArmId{0}, 0.0, src, ++t);

  const auto pmf = oracle::donb_pmf_fixed_data(s, f, EstimatorMode::prior_regularized(1, 1));
  std::map<double, double> hist;
  for (std::size_t j = 0; j < replicates; ++j) {
    const double v = bank.estimate(0, j);
    REQUIRE(std::any_of(pmf.support.begin(), pmf.support.end(),
                        [&](double x) { return std::abs(x - v) <= 1e-12; }));
    hist[v] += 1.0 / static_cast<double>(replicates);
  }
  CHECK(tv_against(pmf, hist) <= 0.01);
}

TEST_CASE("beta_reference_density examples", "[oracle][beta]") {
  const std::vector<double> grid{0.01, 0.2, 0.5, 0.77, 0.99};
  for (const double d : oracle::beta_reference_density(0.5, 2, grid)) CHECK(d == Catch::Approx(1.0));

  std::vector<double> fine;
  for (int i = 1; i < 1000; ++i) fine.push_back(i / 1000.0);
  const auto sym = oracle::beta_reference_density(0.5, 128, fine);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    CHECK(sym[i] == Catch::Approx(sym[fine.size() - 1 - i]).epsilon(1e-9));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    num += fine[i] * sym[i];
    den += sym[i];
  }
  CHECK(num / den == Catch::Approx(0.5).margin(1e-9));

  std::vector<double> finer;
  for (int i = 1; i < 100'000; ++i) finer.push_back(i / 100'000.0);
  const auto skew = oracle::beta_reference_density(0.1, 32, finer);
  const auto peak = std::max_element(skew.begin(), skew.end()) - skew.begin();
  CHECK(finer[static_cast<std::size_t>(peak)] == Catch::Approx(2.2 / 30.0).margin(1e-4));

  REQUIRE_THROWS_AS(oracle::beta_reference_density(0.0, 4, grid), bts::ConfigError);
}

TEST_CASE("distribution_distance examples", "[oracle][distance]") {
  auto pmf = oracle::expected_donb_pmf(8, 0.3, EstimatorMode::pure_mean());
  pmf.probs = oracle::discretize_beta(pmf, 0.3, 8);
  CHECK(oracle::distribution_distance(pmf, 0.3, 8) <= 1e-15);

  // Two atoms at 0 and 1 with mass 1/2 each; the midpoint cells [0, 1/2) and
  // [1/2, 1] carry Beta(1/2, 1/2) mass 1/2 each, so the distance is 0.
  const auto n1 = oracle::expected_donb_pmf(1, 0.5, EstimatorMode::pure_mean());
  CHECK(oracle::distribution_distance(n1, 0.5, 1) <= 1e-12);

  const double d = oracle::distribution_distance(oracle::expected_donb_pmf(32, 0.1, EstimatorMode::pure_mean()),
                                                 0.1, 32);
  CHECK(d >= 0.0);
  CHECK(d <= 1.0);
}
