// JSON form of ExperimentConfig and the compact policy-spec syntax used on
// the command line, e.g. "bts:J=1000,alpha=1,beta=1" or "linear-bts:lambda=1".
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "bts/experiment.hpp"

namespace bts {

using Json = nlohmann::ordered_json;

inline WeightScheme parse_weight_scheme(std::string_view s) {
  if (s == "donb" || s == "double-or-nothing") return WeightScheme::double_or_nothing;
  if (s == "poisson") return WeightScheme::poisson;
  if (s == "exponential") return WeightScheme::exponential;
  throw ConfigError("unknown weight scheme '" + std::string(s) + "'");
}

inline Json to_json(const PolicySpec& spec) {
  Json j;
  j["type"] = policy_name(spec);
  std::visit(Overloaded{[&](const BetaTsSpec& p) {
                          j["prior_alpha"] = p.prior_alpha;
                          j["prior_beta"] = p.prior_beta;
                        },
                        [&](const BtsSpec& p) {
                          j["J"] = p.replicates;
                          j["prior_alpha"] = p.prior_alpha;
                          j["prior_beta"] = p.prior_beta;
                          j["weights"] = to_string(p.weights);
                        },
                        [&](const BtsInfSpec& p) {
                          j["prior_alpha"] = p.prior_alpha;
                          j["prior_beta"] = p.prior_beta;
                        },
                        [&](const LinearBtsSpec& p) {
                          j["J"] = p.replicates;
                          j["lambda"] = p.lambda;
                        },
                        [](const BayesLinearSpec&) {},
                        [&](const FixedArmSpec& p) {
                          if (p.arm) {
                            j["arm"] = *p.arm;
                          } else {
                            j["arm"] = "optimal";
                          }
                        }},
             spec);
  return j;
}

inline Json to_json(const EnvSpec& spec) {
  Json j;
  j["type"] = env_name(spec);
  std::visit(Overloaded{[&](const BernoulliSpec& e) {
                          j["K"] = e.arms;
                          j["eps"] = e.epsilon;
                          j["optimal"] = e.optimal;
                        },
                        [&](const FactorialSpec& e) { j["gamma"] = e.gamma; }},
             spec);
  return j;
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["id"] = c.id;
  j["policy"] = to_json(c.policy);
  j["env"] = to_json(c.env);
  j["T"] = c.horizon;
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["checkpoints"] = c.checkpoints;
  return j;
}

namespace detail {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("invalid value for '") + key + "'");
  }
}

}  // namespace detail

inline PolicySpec policy_from_json(const Json& j) {
  const auto type = detail::get_or<std::string>(j, "type", "");
  const double a = detail::get_or(j, "prior_alpha", 1.0);
  const double b = detail::get_or(j, "prior_beta", 1.0);
  if (type == "beta-ts") return BetaTsSpec{a, b};
  if (type == "bts") {
    return BtsSpec{detail::get_or<std::size_t>(j, "J", 1000), a, b,
                   parse_weight_scheme(detail::get_or<std::string>(j, "weights", "donb"))};
  }
  if (type == "bts-inf") return BtsInfSpec{a, b};
  if (type == "linear-bts") {
    return LinearBtsSpec{detail::get_or<std::size_t>(j, "J", 1000),
                         detail::get_or(j, "lambda", 1.0)};
  }
  if (type == "bayes-linear") return BayesLinearSpec{};
  if (type == "fixed") {
    FixedArmSpec f;
    if (j.contains("arm") && j.at("arm").is_number_unsigned()) f.arm = j.at("arm").get<std::size_t>();
    return f;
  }
  throw ConfigError("unknown policy '" + type +
                    "'; valid policies: beta-ts, bts, bts-inf, linear-bts, bayes-linear, fixed");
}

inline EnvSpec env_from_json(const Json& j) {
  const auto type = detail::get_or<std::string>(j, "type", "");
  if (type == "bernoulli") {
    return BernoulliSpec{detail::get_or<std::size_t>(j, "K", 10), detail::get_or(j, "eps", 0.1),
                         detail::get_or<std::size_t>(j, "optimal", 0)};
  }
  if (type == "factorial") return FactorialSpec{detail::get_or(j, "gamma", 0.0)};
  throw ConfigError("unknown environment '" + type + "'; valid environments: bernoulli, factorial");
}

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  c.id = detail::get_or<std::string>(j, "id", "");
  if (j.contains("policy")) c.policy = policy_from_json(j.at("policy"));
  if (j.contains("env")) c.env = env_from_json(j.at("env"));
  c.horizon = detail::get_or<std::uint64_t>(j, "T", c.horizon);
  c.runs = detail::get_or<std::uint64_t>(j, "runs", c.runs);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("checkpoints")) {
    c.checkpoints = detail::get_or<std::vector<std::uint64_t>>(j, "checkpoints", {});
  } else {
    c.checkpoints = default_checkpoints(c.horizon);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  // an echoed config.json holds an array; a single entry can be replayed
  if (j.is_array()) {
    if (j.size() != 1) throw ConfigError("config file '" + path + "' must hold one experiment");
    return config_from_json(j.front());
  }
  return config_from_json(j);
}

/// Parses "name[:key=value,...]".
inline PolicySpec parse_policy_spec(std::string_view text) {
  const auto colon = text.find(':');
  Json j;
  j["type"] = std::string(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("malformed policy option '" + std::string(item) + "'");
      }
      std::string key(item.substr(0, eq));
      const std::string value(item.substr(eq + 1));
      if (key == "alpha") key = "prior_alpha";
      if (key == "beta") key = "prior_beta";
      if (key == "weights" || (key == "arm" && value == "optimal")) {
        j[key] = value;
        continue;
      }
      if (key == "J" || key == "arm") {
        std::size_t v = 0;
        const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || p != value.data() + value.size()) {
          throw ConfigError("invalid integer for '" + key + "': " + value);
        }
        j[key] = v;
      } else if (key == "prior_alpha" || key == "prior_beta" || key == "lambda") {
        try {
          std::size_t used = 0;
          j[key] = std::stod(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
          throw ConfigError("invalid number for '" + key + "': " + value);
        }
      } else {
        throw ConfigError("unknown policy option '" + key + "'");
      }
    }
  }
  return policy_from_json(j);
}

/// Compact JSON of everything that parameterises a run except checkpoints.
inline std::string param_json(const ExperimentConfig& c) {
  Json j;
  j["policy"] = to_json(c.policy);
  j["env"] = to_json(c.env);
  j["T"] = c.horizon;
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  return j.dump();
}

}  // namespace bts
