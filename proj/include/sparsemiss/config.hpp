#pragma once

// Experiment configuration files.
//
// A config is a UTF-8 JSON object. Every key is optional except where noted;
// unknown keys anywhere are rejected. Grammar, with defaults:
//
//   {
//     "experiment": "name",                        // default "experiment"
//     "dataset": { "m": 100, "n": 100, "rank": 50, "sparsity": 8,
//                  "alpha": 0.5, "noise_sigma": 0.1 },
//     "methods": ["imat", "iht", "lasso"],
//     "pipeline": "raw" | "precompleted",
//     "grids": { "imat": [...], "iht": [...], "lasso": [...] },
//     "trials": 20,
//     "base_seed": 1,
//     "output": "results.csv",
//     "record_wall_time": false,
//     "train_ratio": 0.8,
//     "solver": { "imat_max_iters": 200, "imat_rel_tol": 1e-6,
//                 "iht_max_iters": 200, "iht_rel_tol": 1e-6, "iht_sparsity": 0,
//                 "lasso_max_sweeps": 10000, "lasso_kkt_tol": 1e-6 },
//     "completion": { "grid": [...], "holdout_fraction": 0.1, "shrinkage": null,
//                     "max_iters": 200, "rel_tol": 1e-5, "keep_observed": false },
//     "timings": { "sizes": [[100,100], ...], "rank": 50, "alpha": 0.8,
//                  "grid_points": 7, "trials": 3 }
//   }
//
// The IHT grid is given relative to the safe step 1 / sigma_max(X_train)^2.
// With record_wall_time false the CSV time column is written as 0 so that
// replays are byte-identical; fit times still go to the metadata file.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsemiss/errors.hpp"
#include "sparsemiss/experiment.hpp"

namespace sparsemiss {

/// Invalid configuration; `field` names the offending key path.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : InvalidInput(field.empty() ? what : field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct TimingSettings {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> sizes{
      {100, 100}, {200, 100}, {500, 100}, {1000, 100}, {2000, 100}, {1000, 500}};
  Eigen::Index rank = 50;
  double alpha = 0.8;
  int grid_points = 7;
  std::size_t trials = 3;
};

struct RunConfig {
  std::string experiment = "experiment";
  ExperimentPlan plan;
  std::uint64_t base_seed = 1;
  std::string output_path = "results.csv";
  bool record_wall_time = false;
  TimingSettings timings;
};

inline std::vector<MethodGrid> default_method_grids() {
  return {{Method::imat, default_grid(Method::imat)},
          {Method::iht, default_grid(Method::iht)},
          {Method::lasso, default_grid(Method::lasso)}};
}

inline RunConfig default_run_config() {
  RunConfig rc;
  rc.plan.methods = default_method_grids();
  return rc;
}

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key))
      throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
  }
}

inline std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

inline double get_number(const json& obj, const std::string& where, const char* key,
                         double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path_of(where, key), "expected a number");
  return v.get<double>();
}

inline std::int64_t get_integer(const json& obj, const std::string& where, const char* key,
                                std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path_of(where, key), "expected an integer");
  return v.get<std::int64_t>();
}

inline std::size_t get_count(const json& obj, const std::string& where, const char* key,
                             std::size_t fallback, std::size_t minimum) {
  const auto v = get_integer(obj, where, key, static_cast<std::int64_t>(fallback));
  if (v < static_cast<std::int64_t>(minimum))
    throw ConfigError(path_of(where, key), "must be >= " + std::to_string(minimum));
  return static_cast<std::size_t>(v);
}

inline bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(path_of(where, key), "expected true or false");
  return v.get<bool>();
}

inline std::string get_string(const json& obj, const std::string& where, const char* key,
                              const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path_of(where, key), "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> get_grid(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where, "expected an array of numbers");
  std::vector<double> g;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(where, "expected an array of numbers");
    g.push_back(x.get<double>());
  }
  try {
    validate_grid(g, "grid");
  } catch (const InvalidInput& e) {
    throw ConfigError(where, e.what());
  }
  return g;
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace detail

/// Validate a parsed JSON object into a RunConfig.
inline RunConfig parse_config_json(const nlohmann::json& root) {
  using detail::get_count;
  using detail::get_number;
  RunConfig rc = default_run_config();
  detail::check_keys(root, "",
                     {"experiment", "dataset", "methods", "pipeline", "grids", "trials",
                      "base_seed", "output", "record_wall_time", "train_ratio", "solver",
                      "completion", "timings"});

  rc.experiment = detail::get_string(root, "", "experiment", rc.experiment);
  rc.output_path = detail::get_string(root, "", "output", rc.output_path);
  rc.record_wall_time = detail::get_bool(root, "", "record_wall_time", false);
  rc.plan.trials = get_count(root, "", "trials", rc.plan.trials, 1);
  {
    const auto seed = detail::get_integer(root, "", "base_seed", 1);
    if (seed < 0) throw ConfigError("base_seed", "must be >= 0");
    rc.base_seed = static_cast<std::uint64_t>(seed);
  }
  rc.plan.train_ratio = get_number(root, "", "train_ratio", rc.plan.train_ratio);
  if (!(rc.plan.train_ratio > 0.0 && rc.plan.train_ratio < 1.0))
    throw ConfigError("train_ratio", "must lie in (0, 1)");

  if (root.contains("dataset")) {
    const auto& d = root.at("dataset");
    detail::check_keys(d, "dataset", {"m", "n", "rank", "sparsity", "alpha", "noise_sigma"});
    auto& p = rc.plan.dataset;
    p.m = static_cast<Eigen::Index>(get_count(d, "dataset", "m", static_cast<std::size_t>(p.m), 2));
    p.n = static_cast<Eigen::Index>(get_count(d, "dataset", "n", static_cast<std::size_t>(p.n), 1));
    p.rank = static_cast<Eigen::Index>(get_count(d, "dataset", "rank", static_cast<std::size_t>(p.rank), 1));
    p.sparsity = static_cast<Eigen::Index>(
        get_count(d, "dataset", "sparsity", static_cast<std::size_t>(p.sparsity), 1));
    p.alpha = get_number(d, "dataset", "alpha", p.alpha);
    p.noise_sigma = get_number(d, "dataset", "noise_sigma", p.noise_sigma);
  }
  {
    const auto& p = rc.plan.dataset;
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw ConfigError("dataset.alpha", "must lie in [0, 1]");
    if (!(p.noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma", "must be >= 0");
    if (p.rank > std::min(p.m, p.n)) throw ConfigError("dataset.rank", "must be <= min(m, n)");
    if (p.sparsity > p.n) throw ConfigError("dataset.sparsity", "must be <= n");
  }

  if (root.contains("pipeline")) {
    const auto s = detail::get_string(root, "", "pipeline", "raw");
    const auto p = parse_pipeline(s);
    if (!p) throw ConfigError("pipeline", "expected \"raw\" or \"precompleted\"");
    rc.plan.pipeline = *p;
  }

  std::vector<Method> methods{Method::imat, Method::iht, Method::lasso};
  if (root.contains("methods")) {
    const auto& m = root.at("methods");
    if (!m.is_array() || m.empty()) throw ConfigError("methods", "expected a nonempty array");
    methods.clear();
    for (const auto& s : m) {
      const auto parsed = s.is_string() ? parse_method(s.get<std::string>()) : std::nullopt;
      if (!parsed) throw ConfigError("methods", "expected \"imat\", \"iht\" or \"lasso\"");
      if (std::find(methods.begin(), methods.end(), *parsed) != methods.end())
        throw ConfigError("methods", "duplicate method");
      methods.push_back(*parsed);
    }
  }
  rc.plan.methods.clear();
  for (Method m : methods) rc.plan.methods.push_back({m, default_grid(m)});

  if (root.contains("grids")) {
    const auto& g = root.at("grids");
    detail::check_keys(g, "grids", {"imat", "iht", "lasso"});
    for (auto& mg : rc.plan.methods) {
      const std::string key(to_string(mg.method));
      if (g.contains(key)) mg.grid = detail::get_grid(g.at(key), "grids." + key);
    }
  }

  if (root.contains("solver")) {
    const auto& s = root.at("solver");
    detail::check_keys(s, "solver",
                       {"imat_max_iters", "imat_rel_tol", "iht_max_iters", "iht_rel_tol",
                        "iht_sparsity", "lasso_max_sweeps", "lasso_kkt_tol"});
    auto& o = rc.plan.solver;
    o.imat_max_iters = get_count(s, "solver", "imat_max_iters", o.imat_max_iters, 1);
    o.imat_rel_tol = get_number(s, "solver", "imat_rel_tol", o.imat_rel_tol);
    o.iht_max_iters = get_count(s, "solver", "iht_max_iters", o.iht_max_iters, 1);
    o.iht_rel_tol = get_number(s, "solver", "iht_rel_tol", o.iht_rel_tol);
    o.iht_sparsity = static_cast<Eigen::Index>(get_count(s, "solver", "iht_sparsity", 0, 0));
    o.lasso_max_sweeps = get_count(s, "solver", "lasso_max_sweeps", o.lasso_max_sweeps, 1);
    o.lasso_kkt_tol = get_number(s, "solver", "lasso_kkt_tol", o.lasso_kkt_tol);
    for (auto [v, name] : {std::pair{o.imat_rel_tol, "solver.imat_rel_tol"},
                           std::pair{o.iht_rel_tol, "solver.iht_rel_tol"},
                           std::pair{o.lasso_kkt_tol, "solver.lasso_kkt_tol"}})
      if (!(v > 0.0)) throw ConfigError(name, "must be positive");
    if (o.iht_sparsity > rc.plan.dataset.n) throw ConfigError("solver.iht_sparsity", "must be <= n");
  }

  if (root.contains("completion")) {
    const auto& c = root.at("completion");
    detail::check_keys(c, "completion",
                       {"grid", "holdout_fraction", "shrinkage", "max_iters", "rel_tol",
                        "keep_observed"});
    auto& o = rc.plan.completion;
    if (c.contains("grid")) o.grid = detail::get_grid(c.at("grid"), "completion.grid");
    o.holdout_fraction = get_number(c, "completion", "holdout_fraction", o.holdout_fraction);
    if (!(o.holdout_fraction > 0.0 && o.holdout_fraction < 1.0))
      throw ConfigError("completion.holdout_fraction", "must lie in (0, 1)");
    if (c.contains("shrinkage") && !c.at("shrinkage").is_null()) {
      const double s = get_number(c, "completion", "shrinkage", 0.0);
      if (!(s >= 0.0)) throw ConfigError("completion.shrinkage", "must be >= 0");
      o.fixed_shrinkage = s;
    }
    o.max_iters = get_count(c, "completion", "max_iters", o.max_iters, 1);
    o.rel_tol = get_number(c, "completion", "rel_tol", o.rel_tol);
    if (!(o.rel_tol > 0.0)) throw ConfigError("completion.rel_tol", "must be positive");
    o.keep_observed = detail::get_bool(c, "completion", "keep_observed", o.keep_observed);
  }

  if (root.contains("timings")) {
    const auto& t = root.at("timings");
    detail::check_keys(t, "timings", {"sizes", "rank", "alpha", "grid_points", "trials"});
    auto& o = rc.timings;
    if (t.contains("sizes")) {
      const auto& sz = t.at("sizes");
      if (!sz.is_array() || sz.empty()) throw ConfigError("timings.sizes", "expected a nonempty array");
      o.sizes.clear();
      for (const auto& row : sz) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number_integer() ||
            !row[1].is_number_integer() || row[0].get<std::int64_t>() < 2 ||
            row[1].get<std::int64_t>() < 1)
          throw ConfigError("timings.sizes", "expected [m, n] pairs of positive integers");
        o.sizes.emplace_back(row[0].get<Eigen::Index>(), row[1].get<Eigen::Index>());
      }
    }
    o.rank = static_cast<Eigen::Index>(get_count(t, "timings", "rank", static_cast<std::size_t>(o.rank), 1));
    o.alpha = get_number(t, "timings", "alpha", o.alpha);
    if (!(o.alpha >= 0.0 && o.alpha <= 1.0)) throw ConfigError("timings.alpha", "must lie in [0, 1]");
    o.grid_points = static_cast<int>(get_count(t, "timings", "grid_points", 7, 1));
    o.trials = get_count(t, "timings", "trials", o.trials, 1);
  }

  try {
    validate(rc.plan);
  } catch (const InvalidInput& e) {
    throw ConfigError("", e.what());
  }
  return rc;
}

/// Read and validate a config file. Parse errors report the line number.
inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", path + ":" + std::to_string(detail::line_of_offset(text, e.byte)) +
                              ": parse error: " + e.what());
  }
  // Metadata files embed the resolved config; accept them for replays.
  if (root.is_object() && root.contains("toolkit") && root.contains("config"))
    return parse_config_json(root.at("config"));
  return parse_config_json(root);
}

/// Fully resolved config; parse_config_json(to_json(rc)) reproduces rc.
inline nlohmann::json to_json(const RunConfig& rc) {
  nlohmann::json j;
  const auto& p = rc.plan;
  j["experiment"] = rc.experiment;
  j["dataset"] = {{"m", p.dataset.m},           {"n", p.dataset.n},
                  {"rank", p.dataset.rank},     {"sparsity", p.dataset.sparsity},
                  {"alpha", p.dataset.alpha},   {"noise_sigma", p.dataset.noise_sigma}};
  j["methods"] = nlohmann::json::array();
  j["grids"] = nlohmann::json::object();
  for (const auto& mg : p.methods) {
    j["methods"].push_back(std::string(to_string(mg.method)));
    j["grids"][std::string(to_string(mg.method))] = mg.grid;
  }
  j["pipeline"] = std::string(to_string(p.pipeline));
  j["trials"] = p.trials;
  j["base_seed"] = rc.base_seed;
  j["output"] = rc.output_path;
  j["record_wall_time"] = rc.record_wall_time;
  j["train_ratio"] = p.train_ratio;
  j["solver"] = {{"imat_max_iters", p.solver.imat_max_iters},
                 {"imat_rel_tol", p.solver.imat_rel_tol},
                 {"iht_max_iters", p.solver.iht_max_iters},
                 {"iht_rel_tol", p.solver.iht_rel_tol},
                 {"iht_sparsity", p.solver.iht_sparsity},
                 {"lasso_max_sweeps", p.solver.lasso_max_sweeps},
                 {"lasso_kkt_tol", p.solver.lasso_kkt_tol}};
  j["completion"] = {{"grid", p.completion.grid},
                     {"holdout_fraction", p.completion.holdout_fraction},
                     {"shrinkage", p.completion.fixed_shrinkage
                                       ? nlohmann::json(*p.completion.fixed_shrinkage)
                                       : nlohmann::json(nullptr)},
                     {"max_iters", p.completion.max_iters},
                     {"rel_tol", p.completion.rel_tol},
                     {"keep_observed", p.completion.keep_observed}};
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& [m, n] : rc.timings.sizes) sizes.push_back({m, n});
  j["timings"] = {{"sizes", sizes},
                  {"rank", rc.timings.rank},
                  {"alpha", rc.timings.alpha},
                  {"grid_points", rc.timings.grid_points},
                  {"trials", rc.timings.trials}};
  return j;
}

}  // namespace sparsemiss
