#pragma once

// Result files: sweep CSV, plot-ready curve blocks, the runtime table and
// per-run metadata.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <sys/utsname.h>

#include <json.hpp>

#include "sparsemiss/config.hpp"
#include "sparsemiss/errors.hpp"
#include "sparsemiss/experiment.hpp"
#include "sparsemiss/rng.hpp"

#ifndef SPARSEMISS_VERSION
#define SPARSEMISS_VERSION "0.0.0"
#endif

namespace sparsemiss {

inline constexpr const char* kCsvHeader =
    "method,parameter,mean_rmse,std_rmse,wall_time_seconds,trials";

/// Six significant digits, "nan"/"inf" spelled out.
inline std::string format_g6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::vector<SweepRecord> sorted_records(std::vector<SweepRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    const auto ma = to_string(a.method), mb = to_string(b.method);
    return ma != mb ? ma < mb : a.parameter < b.parameter;
  });
  return records;
}

/// CSV text, LF line endings, rows ordered by method name then parameter.
/// When `with_wall_time` is false the time column is 0.
inline std::string format_csv(const std::vector<SweepRecord>& records, bool with_wall_time) {
  if (records.empty()) throw InvalidInput("emit_csv: no records");
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : sorted_records(records)) {
    out += std::string(to_string(r.method)) + "," + format_g6(r.parameter) + "," +
           format_g6(r.mean_rmse) + "," + format_g6(r.std_rmse) + "," +
           format_g6(with_wall_time ? r.wall_time_seconds : 0.0) + "," +
           std::to_string(r.trial_rmses.size()) + "\n";
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open " + path + " for writing");
  os << text;
  if (!os) throw InvalidInput("failed writing " + path);
}

inline void emit_csv(const std::vector<SweepRecord>& records, const std::string& path,
                     bool with_wall_time = false) {
  write_text(path, format_csv(records, with_wall_time));
}

/// Parsed CSV row. trial_rmses is left empty; `trials` carries the count.
struct CsvRow {
  Method method = Method::imat;
  double parameter = 0.0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  double wall_time_seconds = 0.0;
  std::size_t trials = 0;
};

inline std::vector<CsvRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InvalidInput("csv: bad header");
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw InvalidInput("csv: line " + std::to_string(lineno) + ": expected 6 fields");
    const auto m = parse_method(f[0]);
    if (!m) throw InvalidInput("csv: line " + std::to_string(lineno) + ": unknown method");
    try {
      rows.push_back({*m, std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4]),
                      static_cast<std::size_t>(std::stoull(f[5]))});
    } catch (const std::exception&) {
      throw InvalidInput("csv: line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

/// gnuplot-style blocks, one per method, separated by two blank lines:
/// "# method" then "parameter mean_rmse std_rmse" rows.
inline std::string format_curves(const std::vector<SweepRecord>& records) {
  std::string out;
  std::string current;
  for (const auto& r : sorted_records(records)) {
    const std::string name(to_string(r.method));
    if (name != current) {
      if (!current.empty()) out += "\n\n";
      out += "# " + name + "\n";
      current = name;
    }
    out += format_g6(r.parameter) + " " + format_g6(r.mean_rmse) + " " + format_g6(r.std_rmse) + "\n";
  }
  return out;
}

inline std::string machine_descriptor() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(colon + 2);
      break;
    }
  }
  utsname u{};
  std::string os = "unknown os";
  if (uname(&u) == 0) os = std::string(u.sysname) + " " + u.release + " " + u.machine;
  return cpu + "; " + std::to_string(std::thread::hardware_concurrency()) + " hw threads; " + os;
}

// ---------------------------------------------------------------------------
// Runtime table

struct RuntimeRow {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  double imat_seconds = 0.0;
  double lasso_seconds = 0.0;
};

/// Equal-cardinality grids for the timing comparison: c = 1..k and k
/// log-spaced penalties over [1e-4, 100] (the decades when k = 7).
inline RunConfig timing_config(const RunConfig& base, Eigen::Index m, Eigen::Index n) {
  RunConfig rc = base;
  const auto& t = base.timings;
  rc.experiment = base.experiment + "-timing-m" + std::to_string(m) + "-n" + std::to_string(n);
  rc.plan.dataset.m = m;
  rc.plan.dataset.n = n;
  rc.plan.dataset.rank = std::min({t.rank, m, n});
  rc.plan.dataset.sparsity = std::min(rc.plan.dataset.sparsity, n);
  rc.plan.dataset.alpha = t.alpha;
  rc.plan.pipeline = Pipeline::raw;
  rc.plan.trials = t.trials;
  rc.plan.methods = {{Method::imat, linear_grid(1.0, 1.0, t.grid_points)},
                     {Method::lasso, t.grid_points == 7 ? decade_grid(-4, 2)
                                                        : log_grid(1e-4, 100.0, t.grid_points)}};
  return rc;
}

inline std::vector<RunConfig> default_timing_configs(const RunConfig& base) {
  std::vector<RunConfig> out;
  for (const auto& [m, n] : base.timings.sizes) out.push_back(timing_config(base, m, n));
  return out;
}

/// Fit-only time of IMAT and LASSO for each config (both methods must be
/// present, and only those two).
inline std::vector<RuntimeRow> measure_runtimes(const std::vector<RunConfig>& configs) {
  if (configs.empty()) throw InvalidInput("runtime table: no configurations");
  std::vector<RuntimeRow> rows;
  for (const auto& rc : configs) {
    bool has_imat = false, has_lasso = false;
    for (const auto& mg : rc.plan.methods) {
      if (mg.method == Method::imat) has_imat = true;
      else if (mg.method == Method::lasso) has_lasso = true;
      else throw InvalidInput("runtime table: only imat and lasso are timed");
    }
    if (!has_imat || !has_lasso) throw InvalidInput("runtime table: needs both imat and lasso");
    const auto records = run_experiment(rc.plan, rc.base_seed);
    RuntimeRow row{rc.plan.dataset.m, rc.plan.dataset.n};
    for (const auto& r : records)
      (r.method == Method::imat ? row.imat_seconds : row.lasso_seconds) += r.wall_time_seconds;
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_runtime_table(const std::vector<RuntimeRow>& rows,
                                        const std::string& machine) {
  std::string out = "# machine: " + machine + "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-16s %12s %12s\n", "data size", "IMAT [s]", "LASSO [s]");
  out += buf;
  for (const auto& r : rows) {
    const std::string size = "m=" + std::to_string(r.m) + ",n=" + std::to_string(r.n);
    std::snprintf(buf, sizeof buf, "%-16s %12.4f %12.4f\n", size.c_str(), r.imat_seconds,
                  r.lasso_seconds);
    out += buf;
  }
  return out;
}

inline std::string emit_runtime_table(const std::vector<RunConfig>& configs) {
  return format_runtime_table(measure_runtimes(configs), machine_descriptor());
}

// ---------------------------------------------------------------------------
// Metadata

struct RunSummary {
  std::string command;
  RunConfig config;
  std::vector<SweepRecord> records;
  double total_wall_seconds = 0.0;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json metadata_json(const RunSummary& run) {
  nlohmann::json j;
  j["toolkit"] = {{"name", "sparsemiss"}, {"version", SPARSEMISS_VERSION}};
  j["command"] = run.command;
  j["rng"] = std::string(kRngName);
  j["base_seed"] = run.config.base_seed;
  nlohmann::json seeds = nlohmann::json::array();
  for (std::size_t t = 0; t < run.config.plan.trials; ++t) seeds.push_back(trial_seed(run.config.base_seed, t));
  j["trial_seeds"] = seeds;
  j["seed_derivation"] =
      "trial seed = mix_seed(base_seed, trial); dataset sub-seeds +0..+5 (U, V, sigma, beta, "
      "noise, mask); split +6; completion holdout +7";
  j["config"] = to_json(run.config);
  double fit_seconds = 0.0;
  std::size_t failed = 0;
  for (const auto& r : run.records) {
    fit_seconds += r.wall_time_seconds;
    failed += r.failed_trials;
  }
  j["fit_wall_seconds"] = fit_seconds;
  j["failed_fits"] = failed;
  j["total_wall_seconds"] = run.total_wall_seconds;
  j["machine"] = machine_descriptor();
  j["timestamp"] = utc_timestamp();
  return j;
}

inline void emit_metadata(const RunSummary& run, const std::string& path) {
  write_text(path, metadata_json(run).dump(2) + "\n");
}

}  // namespace sparsemiss
