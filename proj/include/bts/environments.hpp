// Benchmark reward generators. Each step consumes exactly one base draw from
// the caller's stream (a uniform for Bernoulli, a standard normal for the
// factorial design), shared by the played arm and the optimal-arm
// counterfactual.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "bts/core.hpp"

namespace bts {

// ---------------------------------------------------------------------------
// K-armed Bernoulli
// ---------------------------------------------------------------------------

struct BernoulliEnv {
  std::size_t arms = 0;
  double epsilon = 0.0;
  std::vector<double> means;
  ArmId optimal;
};

/// One arm at 0.5, all others at 0.5 - epsilon.
inline BernoulliEnv build_bernoulli(std::size_t arms, double epsilon, ArmId optimal = ArmId{0}) {
  if (arms < 2) throw ConfigError("Bernoulli environment needs K >= 2");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in (0, 0.5)");
  if (optimal.index >= arms) throw ConfigError("optimal arm out of range");
  BernoulliEnv env;
  env.arms = arms;
  env.epsilon = epsilon;
  env.means.assign(arms, 0.5 - epsilon);
  env.means[optimal.index] = 0.5;
  env.optimal = optimal;
  return env;
}

/// Outcome for a given base uniform u in [0, 1).
inline PullOutcome bernoulli_outcome(const BernoulliEnv& env, ArmId arm, double u) {
  if (arm.index >= env.arms) throw ConfigError("arm index out of range");
  const double mean = env.means[arm.index];
  return {u < mean ? 1.0 : 0.0, u < 0.5 ? 1.0 : 0.0};
}

inline PullOutcome bernoulli_pull(const BernoulliEnv& env, ArmId arm, Stream& rng) {
  return bernoulli_outcome(env, arm, rng.uniform01());
}

// ---------------------------------------------------------------------------
// 2^3 factorial design with heteroscedastic Gaussian noise
// ---------------------------------------------------------------------------

inline constexpr int kFactorialDim = 8;
inline constexpr std::size_t kFactorialArms = 8;

using FactorialDesign = Eigen::Matrix<double, 8, 8, Eigen::RowMajor>;
using FactorialVector = Eigen::Matrix<double, 8, 1>;

struct FactorialEnv {
  FactorialDesign design;  // row a = feature vector of arm a
  FactorialVector coefficients;
  FactorialVector variance_components;
  double gamma = 0.0;
  FactorialVector means;      // design * coefficients
  FactorialVector variances;  // design * variance_components
  FactorialVector noise_scale;
  ArmId optimal;
};

/// Full-factorial expansion of cell (x1, x2, x3): intercept, x1, x2, x3,
/// x1x2, x1x3, x2x3, x1x2x3.
inline FactorialDesign factorial_design() {
  FactorialDesign design;
  constexpr std::array<std::array<int, 3>, 8> cells{{{0, 0, 0},
                                                      {1, 0, 0},
                                                      {0, 1, 0},
                                                      {1, 1, 0},
                                                      {0, 0, 1},
                                                      {1, 0, 1},
                                                      {0, 1, 1},
                                                      {1, 1, 1}}};
  for (std::size_t a = 0; a < cells.size(); ++a) {
    const auto [x1, x2, x3] = cells[a];
    const auto row = static_cast<Eigen::Index>(a);
    design.row(row) << 1, x1, x2, x3, x1 * x2, x1 * x3, x2 * x3, x1 * x2 * x3;
  }
  return design;
}

inline FactorialEnv build_factorial(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be >= 0");
  FactorialEnv env;
  env.design = factorial_design();
  env.coefficients << 1.00, -0.20, 0.10, 0.20, 0.10, 0.05, 0.10, 0.01;
  env.variance_components << 1.0, 0.0, 0.0, gamma, 0.0, 0.0, 0.0, gamma;
  env.gamma = gamma;
  env.means = env.design * env.coefficients;
  env.variances = env.design * env.variance_components;
  env.noise_scale = env.variances.cwiseSqrt();
  Eigen::Index best = 0;
  env.means.maxCoeff(&best);
  env.optimal = ArmId{static_cast<std::size_t>(best)};
  return env;
}

/// Outcome for a given base standard-normal draw z.
inline PullOutcome factorial_outcome(const FactorialEnv& env, ArmId arm, double z) {
  if (arm.index >= kFactorialArms) throw ConfigError("arm index out of range");
  const auto a = static_cast<Eigen::Index>(arm.index);
  const auto o = static_cast<Eigen::Index>(env.optimal.index);
  return {env.means[a] + env.noise_scale[a] * z, env.means[o] + env.noise_scale[o] * z};
}

inline PullOutcome factorial_pull(const FactorialEnv& env, ArmId arm, Stream& rng) {
  return factorial_outcome(env, arm, rng.normal());
}

}  // namespace bts
