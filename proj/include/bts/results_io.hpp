// CSV / JSON serialization of traces and aggregate curves.
//
//   aggregates.csv  experiment_id,policy,env,param_json,t,mean,ci_low,ci_high,n_runs
//   traces.csv      experiment_id,run,t,cum_regret,cum_reward
//   results.json    the same fields, one object per experiment
//
// Reals are written with 17 significant digits; single-run intervals are
// empty fields in CSV and null in JSON.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bts/config_io.hpp"
#include "bts/experiment.hpp"

namespace bts {

enum class OutputFormat : std::uint8_t { csv, json };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + std::string(s) + "'; valid formats: csv, json");
}

/// One block of output rows: a curve plus optional per-run traces.
struct ResultEntry {
  std::string experiment_id;
  std::string policy;
  std::string env;
  std::string param_json;
  AggregateCurve curve;
  std::vector<RegretTrace> traces;
};

/// Entry for a single-policy experiment; the curve is cumulative regret.
inline ResultEntry make_entry(const ExperimentResult& r) {
  return {r.config.id, policy_name(r.config.policy), env_name(r.config.env), param_json(r.config),
          r.regret, r.traces};
}

/// Entry for the reward difference of a paired comparison.
inline ResultEntry make_difference_entry(const PairedResult& r, std::string id) {
  Json params;
  params["a"] = Json::parse(param_json(r.a.config));
  params["b"] = Json::parse(param_json(r.b.config));
  params["metric"] = "cum_reward_difference";
  return {std::move(id), policy_name(r.a.config.policy) + "-minus-" + policy_name(r.b.config.policy),
          env_name(r.a.config.env), params.dump(), r.difference, {}};
}

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

}  // namespace detail

inline constexpr std::string_view kAggregateHeader =
    "experiment_id,policy,env,param_json,t,mean,ci_low,ci_high,n_runs";
inline constexpr std::string_view kTraceHeader = "experiment_id,run,t,cum_regret,cum_reward";

inline void write_aggregates_csv(const std::vector<ResultEntry>& entries,
                                 const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << kAggregateHeader << '\n';
  for (const auto& e : entries) {
    const std::string prefix = detail::csv_field(e.experiment_id) + ',' + detail::csv_field(e.policy) +
                               ',' + detail::csv_field(e.env) + ',' + detail::csv_field(e.param_json);
    for (const auto& p : e.curve.points) {
      out << prefix << ',' << p.t << ',' << detail::format_real(p.mean) << ','
          << (p.ci_low ? detail::format_real(*p.ci_low) : "") << ','
          << (p.ci_high ? detail::format_real(*p.ci_high) : "") << ',' << p.n_runs << '\n';
    }
  }
  detail::finish(out, path);
}

inline void write_traces_csv(const std::vector<ResultEntry>& entries,
                             const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << kTraceHeader << '\n';
  for (const auto& e : entries) {
    const std::string id = detail::csv_field(e.experiment_id);
    for (const auto& tr : e.traces) {
      for (const auto& p : tr.checkpoints) {
        out << id << ',' << tr.run_index << ',' << p.t << ',' << detail::format_real(p.cum_regret)
            << ',' << detail::format_real(p.cum_reward) << '\n';
      }
    }
  }
  detail::finish(out, path);
}

inline Json results_to_json(const std::vector<ResultEntry>& entries) {
  Json root;
  root["experiments"] = Json::array();
  for (const auto& e : entries) {
    Json x;
    x["experiment_id"] = e.experiment_id;
    x["policy"] = e.policy;
    x["env"] = e.env;
    x["param_json"] = e.param_json;
    x["aggregates"] = Json::array();
    for (const auto& p : e.curve.points) {
      Json a;
      a["t"] = p.t;
      a["mean"] = p.mean;
      a["ci_low"] = p.ci_low ? Json(*p.ci_low) : Json(nullptr);
      a["ci_high"] = p.ci_high ? Json(*p.ci_high) : Json(nullptr);
      a["n_runs"] = p.n_runs;
      if (p.n_runs == 1) a["single_run"] = true;
      x["aggregates"].push_back(std::move(a));
    }
    x["traces"] = Json::array();
    for (const auto& tr : e.traces) {
      for (const auto& p : tr.checkpoints) {
        x["traces"].push_back(
            Json{{"run", tr.run_index}, {"t", p.t}, {"cum_regret", p.cum_regret},
                 {"cum_reward", p.cum_reward}});
      }
    }
    root["experiments"].push_back(std::move(x));
  }
  return root;
}

/// Writes aggregates.csv + traces.csv, or results.json, into `dir`.
inline void write_results(const std::vector<ResultEntry>& entries, OutputFormat format,
                          const std::filesystem::path& dir) {
  if (format == OutputFormat::csv) {
    write_aggregates_csv(entries, dir / "aggregates.csv");
    write_traces_csv(entries, dir / "traces.csv");
  } else {
    const auto path = dir / "results.json";
    auto out = detail::open_output(path);
    out << results_to_json(entries).dump(2) << '\n';
    detail::finish(out, path);
  }
}

inline void write_config_echo(const std::vector<ExperimentConfig>& configs,
                              const std::filesystem::path& dir) {
  const auto path = dir / "config.json";
  auto out = detail::open_output(path);
  Json j = Json::array();
  for (const auto& c : configs) j.push_back(to_json(c));
  out << j.dump(2) << '\n';
  detail::finish(out, path);
}

// ---------------------------------------------------------------------------
// Reading back (tests and downstream tooling)
// ---------------------------------------------------------------------------

/// Splits one CSV record with RFC 4180 quoting.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

struct AggregateRow {
  std::string experiment_id;
  std::string policy;
  std::string env;
  std::string param_json;
  AggregatePoint point;
};

struct TraceRow {
  std::string experiment_id;
  std::uint64_t run = 0;
  TracePoint point;
};

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                                      std::string_view header,
                                                      std::size_t columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw IoError("unexpected header in '" + path.string() + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != columns) throw IoError("malformed row in '" + path.string() + "'");
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace detail

inline std::vector<AggregateRow> read_aggregates_csv(const std::filesystem::path& path) {
  std::vector<AggregateRow> out;
  for (auto& f : detail::read_csv(path, kAggregateHeader, 9)) {
    AggregateRow r{f[0], f[1], f[2], f[3], {}};
    r.point.t = std::stoull(f[4]);
    r.point.mean = std::stod(f[5]);
    if (!f[6].empty()) r.point.ci_low = std::stod(f[6]);
    if (!f[7].empty()) r.point.ci_high = std::stod(f[7]);
    r.point.n_runs = std::stoull(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TraceRow> read_traces_csv(const std::filesystem::path& path) {
  std::vector<TraceRow> out;
  for (auto& f : detail::read_csv(path, kTraceHeader, 5)) {
    TraceRow r{f[0], std::stoull(f[1]), {}};
    r.point.t = std::stoull(f[2]);
    r.point.cum_regret = std::stod(f[3]);
    r.point.cum_reward = std::stod(f[4]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bts
