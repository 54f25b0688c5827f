// Experiment descriptions, the select -> pull -> update episode loop,
// replication across a worker pool, paired comparisons and the experiment
// presets.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "bts/bernoulli_policies.hpp"
#include "bts/core.hpp"
#include "bts/environments.hpp"
#include "bts/linear_policies.hpp"

namespace bts {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

struct BetaTsSpec {
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  bool operator==(const BetaTsSpec&) const = default;
};

struct BtsSpec {
  std::size_t replicates = 1000;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  WeightScheme weights = WeightScheme::double_or_nothing;
  bool operator==(const BtsSpec&) const = default;
};

struct BtsInfSpec {
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  bool operator==(const BtsInfSpec&) const = default;
};

struct LinearBtsSpec {
  std::size_t replicates = 1000;
  double lambda = 1.0;
  bool operator==(const LinearBtsSpec&) const = default;
};

struct BayesLinearSpec {
  bool operator==(const BayesLinearSpec&) const = default;
};

/// Always plays one arm; no arm means the environment's optimal arm.
struct FixedArmSpec {
  std::optional<std::size_t> arm;
  bool operator==(const FixedArmSpec&) const = default;
};

using PolicySpec =
    std::variant<BetaTsSpec, BtsSpec, BtsInfSpec, LinearBtsSpec, BayesLinearSpec, FixedArmSpec>;

struct BernoulliSpec {
  std::size_t arms = 10;
  double epsilon = 0.1;
  std::size_t optimal = 0;
  bool operator==(const BernoulliSpec&) const = default;
};

struct FactorialSpec {
  double gamma = 0.0;
  bool operator==(const FactorialSpec&) const = default;
};

using EnvSpec = std::variant<BernoulliSpec, FactorialSpec>;

inline std::string policy_name(const PolicySpec& spec) {
  return std::visit(Overloaded{[](const BetaTsSpec&) { return std::string("beta-ts"); },
                               [](const BtsSpec&) { return std::string("bts"); },
                               [](const BtsInfSpec&) { return std::string("bts-inf"); },
                               [](const LinearBtsSpec&) { return std::string("linear-bts"); },
                               [](const BayesLinearSpec&) { return std::string("bayes-linear"); },
                               [](const FixedArmSpec&) { return std::string("fixed"); }},
                    spec);
}

inline std::string env_name(const EnvSpec& spec) {
  return std::holds_alternative<BernoulliSpec>(spec) ? "bernoulli" : "factorial";
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string id;
  PolicySpec policy = BetaTsSpec{};
  EnvSpec env = BernoulliSpec{};
  std::uint64_t horizon = 1000;
  std::uint64_t runs = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> checkpoints;
};

/// {1, 2, 5} x 10^k up to the horizon, always ending at the horizon.
inline std::vector<std::uint64_t> default_checkpoints(std::uint64_t horizon) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t decade = 1; decade <= horizon; decade *= 10) {
    for (const std::uint64_t m : {1, 2, 5}) {
      const std::uint64_t t = m * decade;
      if (t <= horizon) out.push_back(t);
    }
    if (decade > horizon / 10) break;
  }
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

inline std::vector<std::uint64_t> every_step(std::uint64_t horizon) {
  std::vector<std::uint64_t> out(horizon);
  for (std::uint64_t t = 0; t < horizon; ++t) out[t] = t + 1;
  return out;
}

inline bool is_linear(const PolicySpec& p) {
  return std::holds_alternative<LinearBtsSpec>(p) || std::holds_alternative<BayesLinearSpec>(p);
}

inline void validate(const ExperimentConfig& config) {
  if (config.horizon < 1) throw ConfigError("horizon T must be >= 1");
  if (config.runs < 1) throw ConfigError("runs must be >= 1");
  std::uint64_t prev = 0;
  for (const auto t : config.checkpoints) {
    if (t <= prev || t > config.horizon) {
      throw ConfigError("checkpoints must be strictly increasing within [1, T]");
    }
    prev = t;
  }
  const bool factorial = std::holds_alternative<FactorialSpec>(config.env);
  const bool fixed = std::holds_alternative<FixedArmSpec>(config.policy);
  if (!fixed && is_linear(config.policy) != factorial) {
    throw ConfigError("policy '" + policy_name(config.policy) +
                      "' is not compatible with environment '" + env_name(config.env) + "'");
  }
  std::visit(Overloaded{[](const BernoulliSpec& e) {
                          (void)build_bernoulli(e.arms, e.epsilon, ArmId{e.optimal});
                        },
                        [](const FactorialSpec& e) { (void)build_factorial(e.gamma); }},
             config.env);
  const std::size_t arms = factorial ? kFactorialArms
                                     : std::get<BernoulliSpec>(config.env).arms;
  std::visit(Overloaded{[](const BetaTsSpec& p) { (void)BetaTsState(1, p.prior_alpha, p.prior_beta); },
                        [](const BtsSpec& p) {
                          if (p.replicates < 1) throw ConfigError("replicate count J must be >= 1");
                          (void)BetaTsState(1, p.prior_alpha, p.prior_beta);
                        },
                        [](const BtsInfSpec& p) { (void)BetaTsState(1, p.prior_alpha, p.prior_beta); },
                        [](const LinearBtsSpec& p) {
                          if (p.replicates < 1) throw ConfigError("replicate count J must be >= 1");
                          if (!(p.lambda > 0.0)) throw ConfigError("ridge penalty lambda must be > 0");
                        },
                        [](const BayesLinearSpec&) {},
                        [arms](const FixedArmSpec& p) {
                          if (p.arm && *p.arm >= arms) throw ConfigError("fixed arm out of range");
                        }},
             config.policy);
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct TracePoint {
  std::uint64_t t = 0;
  double cum_regret = 0.0;
  double cum_reward = 0.0;
  bool operator==(const TracePoint&) const = default;
};

struct RegretTrace {
  std::uint64_t run_index = 0;
  std::vector<TracePoint> checkpoints;
  bool operator==(const RegretTrace&) const = default;
};

struct AggregatePoint {
  std::uint64_t t = 0;
  double mean = 0.0;
  std::optional<double> ci_low;   // empty for a single run
  std::optional<double> ci_high;
  std::uint64_t n_runs = 0;
  bool operator==(const AggregatePoint&) const = default;
};

struct AggregateCurve {
  std::vector<AggregatePoint> points;
  bool operator==(const AggregateCurve&) const = default;
};

/// Pointwise mean with a normal-approximation 95% interval,
/// mean +- 1.96 * sd / sqrt(n). `values[r][c]` is run r at checkpoint c.
inline AggregateCurve aggregate(const std::vector<std::uint64_t>& checkpoints,
                                const std::vector<std::vector<double>>& values) {
  AggregateCurve curve;
  const std::size_t n = values.size();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    AggregatePoint p;
    p.t = checkpoints[c];
    p.n_runs = n;
    if (n > 0) {
      double sum = 0.0;
      for (const auto& run : values) sum += run.at(c);
      p.mean = sum / static_cast<double>(n);
      if (n > 1) {
        double ss = 0.0;
        for (const auto& run : values) ss += (run[c] - p.mean) * (run[c] - p.mean);
        const double half = 1.96 * std::sqrt(ss / static_cast<double>(n - 1)) /
                            std::sqrt(static_cast<double>(n));
        p.ci_low = p.mean - half;
        p.ci_high = p.mean + half;
      }
    }
    curve.points.push_back(p);
  }
  return curve;
}

template <typename Projection>
AggregateCurve aggregate_traces(const std::vector<std::uint64_t>& checkpoints,
                                const std::vector<RegretTrace>& traces, Projection proj) {
  std::vector<std::vector<double>> values;
  values.reserve(traces.size());
  for (const auto& tr : traces) {
    std::vector<double> row;
    row.reserve(tr.checkpoints.size());
    for (const auto& p : tr.checkpoints) row.push_back(proj(p));
    values.push_back(std::move(row));
  }
  return aggregate(checkpoints, values);
}

// ---------------------------------------------------------------------------
// Episode
// ---------------------------------------------------------------------------

using StepObserver = std::function<void(const StepRecord&)>;

namespace detail {

struct FixedArmPolicy {
  ArmId arm;
  ArmId select() const { return arm; }
  template <typename... Args>
  ArmId select(const Args&...) const {
    return arm;
  }
  template <typename... Args>
  void update(const Args&...) {}
};

using LinearBts8 = LinearBtsPolicy<kFactorialDim>;
using BayesLinear8 = BayesLinearPolicy<kFactorialDim>;
using Policy = std::variant<BetaTsPolicy, BtsPolicy, BtsInfPolicy, LinearBts8, BayesLinear8,
                            FixedArmPolicy>;
using Environment = std::variant<BernoulliEnv, FactorialEnv>;

inline Environment make_environment(const EnvSpec& spec) {
  return std::visit(
      Overloaded{[](const BernoulliSpec& e) -> Environment {
                   return build_bernoulli(e.arms, e.epsilon, ArmId{e.optimal});
                 },
                 [](const FactorialSpec& e) -> Environment { return build_factorial(e.gamma); }},
      spec);
}

inline Policy make_policy(const ExperimentConfig& config, const Environment& env,
                          std::uint64_t run_index) {
  const RngStreamKey policy_key{config.seed, run_index, StreamRole::policy};
  const RngStreamKey weight_key{config.seed, run_index, StreamRole::replicate_weights};
  const std::size_t arms =
      std::visit(Overloaded{[](const BernoulliEnv& e) { return e.arms; },
                            [](const FactorialEnv&) { return kFactorialArms; }},
                 env);
  const ArmId optimal = std::visit([](const auto& e) { return e.optimal; }, env);
  return std::visit(
      Overloaded{
          [&](const BetaTsSpec& p) -> Policy {
            return BetaTsPolicy(arms, p.prior_alpha, p.prior_beta, derive_stream(policy_key));
          },
          [&](const BtsSpec& p) -> Policy {
            return BtsPolicy(arms, p.replicates, p.prior_alpha, p.prior_beta,
                             derive_stream(policy_key), ReplicateWeightSource(weight_key),
                             p.weights);
          },
          [&](const BtsInfSpec& p) -> Policy {
            return BtsInfPolicy(arms, p.prior_alpha, p.prior_beta, derive_stream(policy_key));
          },
          [&](const LinearBtsSpec& p) -> Policy {
            return LinearBts8(p.replicates, kFactorialDim, p.lambda, derive_stream(policy_key),
                              ReplicateWeightSource(weight_key));
          },
          [&](const BayesLinearSpec&) -> Policy {
            return BayesLinear8(kFactorialDim, derive_stream(policy_key));
          },
          [&](const FixedArmSpec& p) -> Policy {
            return FixedArmPolicy{p.arm ? ArmId{*p.arm} : optimal};
          }},
      config.policy);
}

template <typename P>
inline constexpr bool kLinearPolicy =
    std::is_same_v<P, LinearBts8> || std::is_same_v<P, BayesLinear8>;

template <typename P>
inline constexpr bool kBernoulliPolicy =
    std::is_same_v<P, BetaTsPolicy> || std::is_same_v<P, BtsPolicy> ||
    std::is_same_v<P, BtsInfPolicy>;

}  // namespace detail

/// Runs one replication. Randomness comes only from streams keyed by
/// (seed, run_index, role); memory is O(policy state + checkpoints).
inline RegretTrace run_episode(const ExperimentConfig& config, std::uint64_t run_index,
                               const StepObserver* observer = nullptr) {
  validate(config);
  const auto env = detail::make_environment(config.env);
  auto policy = detail::make_policy(config, env, run_index);
  Stream env_rng = derive_stream({config.seed, run_index, StreamRole::environment});

  RegretTrace trace;
  trace.run_index = run_index;
  trace.checkpoints.reserve(config.checkpoints.size());

  std::visit(
      [&](auto& pol, const auto& environment) {
        using P = std::decay_t<decltype(pol)>;
        using E = std::decay_t<decltype(environment)>;
        constexpr bool factorial = std::is_same_v<E, FactorialEnv>;
        if constexpr ((detail::kLinearPolicy<P> && !factorial) ||
                      (detail::kBernoulliPolicy<P> && factorial)) {
          throw ConfigError("policy/environment mismatch");
        } else {
          ArmDesign<kFactorialDim> design;
          if constexpr (factorial) design = environment.design;
          double cum_regret = 0.0;
          double cum_reward = 0.0;
          std::size_t next = 0;
          for (std::uint64_t t = 1; t <= config.horizon; ++t) {
            ArmId arm;
            if constexpr (detail::kLinearPolicy<P>) {
              arm = pol.select(design);
            } else {
              arm = pol.select();
            }
            PullOutcome out;
            if constexpr (factorial) {
              out = factorial_pull(environment, arm, env_rng);
            } else {
              out = bernoulli_pull(environment, arm, env_rng);
            }
            if constexpr (detail::kLinearPolicy<P>) {
              pol.update(design.row(static_cast<Eigen::Index>(arm.index)).transpose(), out.reward);
            } else {
              pol.update(arm, out.reward);
            }
            cum_regret += out.counterfactual_optimal - out.reward;
            cum_reward += out.reward;
            if (observer != nullptr) {
              (*observer)(StepRecord{t, arm, out.reward, out.counterfactual_optimal});
            }
            if (next < config.checkpoints.size() && config.checkpoints[next] == t) {
              trace.checkpoints.push_back({t, cum_regret, cum_reward});
              ++next;
            }
          }
        }
      },
      policy, env);
  return trace;
}

/// Calls fn(run) for run in [0, runs) on up to `workers` threads. Any
/// exception is rethrown after all workers finish (lowest run index first).
template <typename Fn>
void parallel_runs(std::uint64_t runs, unsigned workers, Fn&& fn) {
  workers = std::max(1U, workers);
  if (workers == 1 || runs <= 1) {
    for (std::uint64_t r = 0; r < runs; ++r) fn(r);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::exception_ptr> errors(runs);
  {
    std::vector<std::jthread> pool;
    const auto count = static_cast<unsigned>(std::min<std::uint64_t>(workers, runs));
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) {
          try {
            fn(r);
          } catch (...) {
            errors[r] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline unsigned default_workers() { return std::max(1U, std::thread::hardware_concurrency()); }

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RegretTrace> traces;  // ordered by run index
  AggregateCurve regret;
  AggregateCurve reward;
};

inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       unsigned workers = default_workers()) {
  validate(config);
  ExperimentResult result;
  result.config = config;
  result.traces.resize(config.runs);
  parallel_runs(config.runs, workers,
                [&](std::uint64_t r) { result.traces[r] = run_episode(config, r); });
  result.regret = aggregate_traces(config.checkpoints, result.traces,
                                   [](const TracePoint& p) { return p.cum_regret; });
  result.reward = aggregate_traces(config.checkpoints, result.traces,
                                   [](const TracePoint& p) { return p.cum_reward; });
  return result;
}

struct PairedResult {
  ExperimentResult a;
  ExperimentResult b;
  AggregateCurve difference;  // cumulative reward, a - b, per run
};

inline void check_pairable(const ExperimentConfig& a, const ExperimentConfig& b) {
  if (!(a.env == b.env)) throw ConfigError("paired configs must share the environment");
  if (a.horizon != b.horizon) throw ConfigError("paired configs must share the horizon");
  if (a.runs != b.runs) throw ConfigError("paired configs must share the run count");
  if (a.seed != b.seed) throw ConfigError("paired configs must share the seed");
  if (a.checkpoints != b.checkpoints) throw ConfigError("paired configs must share checkpoints");
}

/// Both policies face environment streams with identical keys in every run,
/// so the base draw at step t is the same for both.
inline PairedResult run_paired_comparison(const ExperimentConfig& a, const ExperimentConfig& b,
                                          unsigned workers = default_workers()) {
  check_pairable(a, b);
  PairedResult out;
  out.a = run_experiment(a, workers);
  out.b = run_experiment(b, workers);
  std::vector<std::vector<double>> diffs(a.runs);
  for (std::uint64_t r = 0; r < a.runs; ++r) {
    const auto& ta = out.a.traces[r].checkpoints;
    const auto& tb = out.b.traces[r].checkpoints;
    diffs[r].resize(ta.size());
    for (std::size_t c = 0; c < ta.size(); ++c) diffs[r][c] = ta[c].cum_reward - tb[c].cum_reward;
  }
  out.difference = aggregate(a.checkpoints, diffs);
  return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

enum class Scale : std::uint8_t { paper, desk };

struct PresetParams {
  std::size_t arms = 10;
  double epsilon = 0.1;
  std::size_t replicates = 1000;
  double gamma = 1.0;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2-bernoulli", "fig3-jsweep", "fig4-factorial"};
  return names;
}

inline std::string preset_description(std::string_view name) {
  if (name == "fig2-bernoulli") return "Beta-TS, BTS(J) and BTS(J=inf) on the K-armed Bernoulli bandit";
  if (name == "fig3-jsweep") return "BTS with J in {10, 100, 1000, 10000, inf}, K=10, eps=0.1";
  if (name == "fig4-factorial") return "linear BTS(J, lambda=1) vs Bayesian linear TS, factorial design";
  return {};
}

/// The configs behind one preset. `paper` scale: T=1e6 and 1000 runs for the
/// Bernoulli presets, T=1e4 and 100 runs for the factorial one. `desk` scale:
/// T=1e5 and 200 runs for Bernoulli, unchanged for factorial.
inline std::vector<ExperimentConfig> preset(std::string_view name, const PresetParams& params,
                                            Scale scale) {
  std::vector<ExperimentConfig> out;
  auto make = [&](std::string id, PolicySpec policy, EnvSpec env, std::uint64_t horizon,
                  std::uint64_t runs) {
    ExperimentConfig c;
    c.id = std::move(id);
    c.policy = policy;
    c.env = env;
    c.horizon = horizon;
    c.runs = runs;
    c.seed = params.seed;
    c.checkpoints = default_checkpoints(horizon);
    out.push_back(std::move(c));
  };
  const std::string prefix(name);
  if (name == "fig2-bernoulli" || name == "fig3-jsweep") {
    const std::uint64_t horizon = scale == Scale::paper ? 1'000'000 : 100'000;
    const std::uint64_t runs = scale == Scale::paper ? 1000 : 200;
    BernoulliSpec env{params.arms, params.epsilon, 0};
    if (name == "fig2-bernoulli") {
      make(prefix + "/beta-ts", BetaTsSpec{}, env, horizon, runs);
      make(prefix + "/bts-J" + std::to_string(params.replicates),
           BtsSpec{params.replicates, 1.0, 1.0, WeightScheme::double_or_nothing}, env, horizon, runs);
      make(prefix + "/bts-inf", BtsInfSpec{}, env, horizon, runs);
    } else {
      env = BernoulliSpec{10, 0.1, 0};
      for (const std::size_t j : {10, 100, 1000, 10000}) {
        make(prefix + "/bts-J" + std::to_string(j), BtsSpec{j, 1.0, 1.0}, env, horizon, runs);
      }
      make(prefix + "/bts-inf", BtsInfSpec{}, env, horizon, runs);
    }
  } else if (name == "fig4-factorial") {
    const FactorialSpec env{params.gamma};
    make(prefix + "/linear-bts-J" + std::to_string(params.replicates),
         LinearBtsSpec{params.replicates, 1.0}, env, 10'000, 100);
    make(prefix + "/bayes-linear", BayesLinearSpec{}, env, 10'000, 100);
  } else {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + std::string(name) + "'; valid presets: " + valid);
  }
  return out;
}

}  // namespace bts
