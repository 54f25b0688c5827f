// Command-line front end: run, compare, oracle, presets.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error,
// 4 I/O error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bts/bts.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

constexpr std::uint64_t kMaxFullTrace = 100'000;

struct CommonFlags {
  std::optional<std::string> preset;
  std::string scale = "desk";
  std::optional<std::string> config_file;
  std::optional<std::string> id;
  std::optional<std::string> env;
  std::optional<std::size_t> arms;
  std::optional<double> epsilon;
  std::optional<double> gamma;
  std::optional<std::size_t> replicates;
  std::optional<double> lambda;
  std::optional<std::uint64_t> horizon;
  std::optional<std::uint64_t> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> checkpoints;
  std::string out = "results";
  std::string format = "csv";
  unsigned workers = bts::default_workers();
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--preset", f.preset, "Experiment preset (see `presets`)");
  cmd->add_option("--scale", f.scale, "Preset scale: paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--config", f.config_file, "JSON experiment config; flags override it");
  cmd->add_option("--id", f.id, "Experiment id written to the output");
  cmd->add_option("--env", f.env, "Environment: bernoulli or factorial")
      ->check(CLI::IsMember({"bernoulli", "factorial"}));
  cmd->add_option("--K", f.arms, "Number of Bernoulli arms");
  cmd->add_option("--eps", f.epsilon, "Gap between the best and the other Bernoulli arms");
  cmd->add_option("--gamma", f.gamma, "Heteroscedasticity scale of the factorial environment");
  cmd->add_option("--J", f.replicates, "Bootstrap replicates");
  cmd->add_option("--lambda", f.lambda, "Ridge penalty of linear BTS");
  cmd->add_option("--T", f.horizon, "Horizon");
  cmd->add_option("--runs", f.runs, "Replications");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--checkpoints", f.checkpoints,
                  "Comma-separated steps, 'default' ({1,2,5}x10^k) or 'all'");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
}

std::vector<std::uint64_t> parse_checkpoints(const std::string& text, std::uint64_t horizon) {
  if (text == "default") return bts::default_checkpoints(horizon);
  if (text == "all") {
    if (horizon > kMaxFullTrace) {
      throw bts::ConfigError("--checkpoints all is limited to T <= 100000");
    }
    return bts::every_step(horizon);
  }
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw bts::ConfigError("invalid checkpoint '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void apply_policy_overrides(bts::PolicySpec& policy, const CommonFlags& f) {
  if (f.replicates) {
    if (auto* p = std::get_if<bts::BtsSpec>(&policy)) p->replicates = *f.replicates;
    if (auto* p = std::get_if<bts::LinearBtsSpec>(&policy)) p->replicates = *f.replicates;
  }
  if (f.lambda) {
    if (auto* p = std::get_if<bts::LinearBtsSpec>(&policy)) p->lambda = *f.lambda;
  }
}

void apply_env_overrides(bts::EnvSpec& env, const CommonFlags& f) {
  if (f.env) {
    const bool want_factorial = *f.env == "factorial";
    if (want_factorial != std::holds_alternative<bts::FactorialSpec>(env)) {
      env = want_factorial ? bts::EnvSpec{bts::FactorialSpec{}} : bts::EnvSpec{bts::BernoulliSpec{}};
    }
  }
  if (auto* e = std::get_if<bts::BernoulliSpec>(&env)) {
    if (f.arms) e->arms = *f.arms;
    if (f.epsilon) e->epsilon = *f.epsilon;
  }
  if (auto* e = std::get_if<bts::FactorialSpec>(&env)) {
    if (f.gamma) e->gamma = *f.gamma;
  }
}

void apply_run_overrides(bts::ExperimentConfig& c, const CommonFlags& f) {
  if (f.horizon) c.horizon = *f.horizon;
  if (f.runs) c.runs = *f.runs;
  if (f.seed) c.seed = *f.seed;
  if (f.checkpoints) {
    c.checkpoints = parse_checkpoints(*f.checkpoints, c.horizon);
  } else if (f.horizon) {
    c.checkpoints = bts::default_checkpoints(c.horizon);
  }
}

std::vector<bts::ExperimentConfig> preset_configs(const CommonFlags& f) {
  bts::PresetParams params;
  if (f.arms) params.arms = *f.arms;
  if (f.epsilon) params.epsilon = *f.epsilon;
  if (f.replicates) params.replicates = *f.replicates;
  if (f.gamma) params.gamma = *f.gamma;
  if (f.seed) params.seed = *f.seed;
  auto configs =
      bts::preset(*f.preset, params, f.scale == "paper" ? bts::Scale::paper : bts::Scale::desk);
  for (auto& c : configs) apply_run_overrides(c, f);
  return configs;
}

std::string default_id(const bts::ExperimentConfig& c) {
  return bts::policy_name(c.policy) + "@" + bts::env_name(c.env);
}

bts::ExperimentConfig single_config(const CommonFlags& f, const std::optional<std::string>& policy) {
  bts::ExperimentConfig c;
  if (f.config_file) {
    c = bts::load_config(*f.config_file);
  } else {
    c.checkpoints = bts::default_checkpoints(c.horizon);
  }
  if (policy) c.policy = bts::parse_policy_spec(*policy);
  if (!f.config_file && !f.env && bts::is_linear(c.policy)) c.env = bts::FactorialSpec{};
  apply_policy_overrides(c.policy, f);
  apply_env_overrides(c.env, f);
  apply_run_overrides(c, f);
  if (f.id) c.id = *f.id;
  if (c.id.empty()) c.id = default_id(c);
  return c;
}

void report(const bts::AggregateCurve& curve, const std::string& label) {
  if (curve.points.empty()) return;
  const auto& p = curve.points.back();
  std::printf("%-40s t=%llu mean=%.6g", label.c_str(), static_cast<unsigned long long>(p.t), p.mean);
  if (p.ci_low) std::printf(" ci=[%.6g, %.6g]", *p.ci_low, *p.ci_high);
  std::printf(" n=%llu\n", static_cast<unsigned long long>(p.n_runs));
}

int cmd_run(const CommonFlags& f, const std::optional<std::string>& policy) {
  std::vector<bts::ExperimentConfig> configs;
  if (f.preset) {
    configs = preset_configs(f);
  } else {
    configs.push_back(single_config(f, policy));
  }
  for (const auto& c : configs) bts::validate(c);
  const auto format = bts::parse_output_format(f.format);

  std::vector<bts::ResultEntry> entries;
  for (const auto& c : configs) {
    const auto result = bts::run_experiment(c, f.workers);
    report(result.regret, c.id + " regret");
    entries.push_back(bts::make_entry(result));
  }
  bts::write_results(entries, format, f.out);
  bts::write_config_echo(configs, f.out);
  return 0;
}

int cmd_compare(const CommonFlags& f, const std::optional<std::string>& spec_a,
                const std::optional<std::string>& spec_b) {
  bts::ExperimentConfig a;
  bts::ExperimentConfig b;
  if (f.preset) {
    const auto configs = preset_configs(f);
    if (configs.size() != 2) {
      throw bts::ConfigError("compare needs a two-policy preset (fig4-factorial)");
    }
    a = configs[0];
    b = configs[1];
  } else {
    if (!spec_a || !spec_b) throw bts::ConfigError("compare needs --a and --b policy specs");
    a = single_config(f, spec_a);
    b = single_config(f, spec_b);
    if (!f.id) {
      a.id = default_id(a) + "/a";
      b.id = default_id(b) + "/b";
    } else {
      a.id = *f.id + "/a";
      b.id = *f.id + "/b";
    }
  }
  bts::validate(a);
  bts::validate(b);
  bts::check_pairable(a, b);
  const auto format = bts::parse_output_format(f.format);

  const auto result = bts::run_paired_comparison(a, b, f.workers);
  const std::string diff_id =
      f.id ? *f.id : (f.preset ? *f.preset : default_id(a) + "-vs-" + bts::policy_name(b.policy));
  report(result.difference, diff_id + " reward difference");
  std::vector<bts::ResultEntry> entries{bts::make_difference_entry(result, diff_id),
                                        bts::make_entry(result.a), bts::make_entry(result.b)};
  bts::write_results(entries, format, f.out);
  bts::write_config_echo({a, b}, f.out);
  return 0;
}

struct OracleFlags {
  std::uint64_t n = 8;
  double theta = 0.5;
  std::string mode = "pure";
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  std::size_t grid = 200;
  std::string out = "oracle";
};

int cmd_oracle(const OracleFlags& f) {
  const auto mode = f.mode == "prior" ? bts::oracle::EstimatorMode::prior_regularized(f.prior_alpha,
                                                                                      f.prior_beta)
                                      : bts::oracle::EstimatorMode::pure_mean();
  const auto pmf = bts::oracle::expected_donb_pmf(f.n, f.theta, mode);
  std::vector<double> grid(f.grid);
  for (std::size_t i = 0; i < f.grid; ++i) {
    grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(f.grid);
  }
  const auto density = bts::oracle::beta_reference_density(f.theta, f.n, grid);
  const double tv = bts::oracle::distribution_distance(pmf, f.theta, f.n);

  const std::filesystem::path dir(f.out);
  {
    const auto path = dir / "pmf.csv";
    auto out = bts::detail::open_output(path);
    out << "value,prob\n";
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      out << bts::detail::format_real(pmf.support[k]) << ','
          << bts::detail::format_real(pmf.probs[k]) << '\n';
    }
    bts::detail::finish(out, path);
  }
  {
    const auto path = dir / "beta.csv";
    auto out = bts::detail::open_output(path);
    out << "grid,density\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out << bts::detail::format_real(grid[i]) << ',' << bts::detail::format_real(density[i])
          << '\n';
    }
    bts::detail::finish(out, path);
  }
  std::printf("n=%llu theta=%g mode=%s atoms=%zu mean=%.12g tv_to_beta=%.6g\n",
              static_cast<unsigned long long>(f.n), f.theta, f.mode.c_str(), pmf.size(),
              pmf.mean(), tv);
  return 0;
}

int cmd_presets() {
  for (const auto& name : bts::preset_names()) {
    std::printf("%-16s %s\n", name.c_str(), bts::preset_description(name).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bootstrap Thompson sampling simulations"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::optional<std::string> run_policy;
  auto* run = app.add_subcommand("run", "Run one experiment or a preset");
  add_common(run, run_flags);
  run->add_option("--policy", run_policy,
                  "Policy spec: beta-ts | bts[:J=..] | bts-inf | linear-bts[:J=..,lambda=..] | "
                  "bayes-linear | fixed[:arm=..]");

  CommonFlags cmp_flags;
  std::optional<std::string> spec_a;
  std::optional<std::string> spec_b;
  auto* compare = app.add_subcommand("compare", "Paired comparison of two policies");
  add_common(compare, cmp_flags);
  compare->add_option("--a", spec_a, "First policy spec");
  compare->add_option("--b", spec_b, "Second policy spec");

  OracleFlags oracle_flags;
  auto* oracle = app.add_subcommand("oracle", "Exact bootstrap distribution and Beta reference");
  oracle->add_option("--n", oracle_flags.n, "Observations")->check(CLI::Range(1, 256));
  oracle->add_option("--theta", oracle_flags.theta, "True success probability");
  oracle->add_option("--mode", oracle_flags.mode, "pure or prior")
      ->check(CLI::IsMember({"pure", "prior"}));
  oracle->add_option("--prior-alpha", oracle_flags.prior_alpha);
  oracle->add_option("--prior-beta", oracle_flags.prior_beta);
  oracle->add_option("--grid", oracle_flags.grid, "Beta density grid points")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--out", oracle_flags.out, "Output directory");

  auto* presets = app.add_subcommand("presets", "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags, run_policy);
    if (*compare) return cmd_compare(cmp_flags, spec_a, spec_b);
    if (*oracle) return cmd_oracle(oracle_flags);
    if (*presets) return cmd_presets();
  } catch (const bts::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const bts::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
