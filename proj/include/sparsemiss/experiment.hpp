#pragma once

// Benchmark protocol: generate a dataset per trial, optionally complete it,
// split rows 80/20, fit every grid point on the training rows and score the
// held-out labels by RMSE. Trial t of a run with base seed b always uses
// dataset seed mix_seed(b, t), so records do not depend on evaluation order
// and every method sees the same datasets.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparsemiss/completion.hpp"
#include "sparsemiss/datagen.hpp"
#include "sparsemiss/errors.hpp"
#include "sparsemiss/linalg.hpp"
#include "sparsemiss/rng.hpp"
#include "sparsemiss/solvers.hpp"

namespace sparsemiss {

enum class Method { imat, iht, lasso };
enum class Pipeline { raw, precompleted };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::imat: return "imat";
    case Method::iht: return "iht";
    case Method::lasso: return "lasso";
  }
  return "?";
}

inline std::string_view to_string(Pipeline p) {
  return p == Pipeline::raw ? "raw" : "precompleted";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "imat") return Method::imat;
  if (s == "iht") return Method::iht;
  if (s == "lasso") return Method::lasso;
  return std::nullopt;
}

inline std::optional<Pipeline> parse_pipeline(std::string_view s) {
  if (s == "raw") return Pipeline::raw;
  if (s == "precompleted") return Pipeline::precompleted;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Split and scoring

struct SplitDataset {
  DenseMatrix train_x;
  Vector train_y;
  DenseMatrix test_x;
  Vector test_y;
  std::uint64_t split_seed = 0;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
};

/// First ceil(ratio * m) rows of a seeded uniform permutation train, the rest test.
inline SplitDataset split(const DenseMatrix& x, const Vector& y, double ratio,
                          std::uint64_t split_seed) {
  const Eigen::Index m = x.rows();
  if (y.size() != m) throw InvalidInput("split: rows of X do not match length of Y");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("split: ratio must lie in (0, 1)");
  if (!(m * ratio >= 1.0) || !(m * (1.0 - ratio) >= 1.0))
    throw InvalidInput("split: degenerate train or test size");

  // ratio * m can land a hair above an integer in floating point.
  const double raw = ratio * static_cast<double>(m);
  auto n_train = static_cast<Eigen::Index>(std::ceil(raw - 1e-9 * raw));
  n_train = std::clamp<Eigen::Index>(n_train, 1, m - 1);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(split_seed);
  for (Eigen::Index i = m - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }

  SplitDataset out;
  out.split_seed = split_seed;
  out.train_rows.assign(perm.begin(), perm.begin() + n_train);
  out.test_rows.assign(perm.begin() + n_train, perm.end());
  out.train_x = x(out.train_rows, Eigen::all);
  out.train_y = y(out.train_rows);
  out.test_x = x(out.test_rows, Eigen::all);
  out.test_y = y(out.test_rows);
  return out;
}

inline SplitDataset split(const Dataset& ds, double ratio, std::uint64_t split_seed) {
  return split(ds.masked.observed, ds.labels, ratio, split_seed);
}

inline double rmse(const Vector& y_pred, const Vector& y_true) {
  if (y_pred.size() != y_true.size()) throw InvalidInput("rmse: length mismatch");
  if (y_pred.size() < 1) throw InvalidInput("rmse: empty input");
  return std::sqrt((y_pred - y_true).squaredNorm() / static_cast<double>(y_pred.size()));
}

// ---------------------------------------------------------------------------
// Grids

/// Log grid 10^lo, 10^(lo+1), ..., 10^hi.
inline std::vector<double> decade_grid(int lo, int hi) {
  std::vector<double> g;
  for (int e = lo; e <= hi; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

/// `count` log-spaced values from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g;
  if (count == 1) return {hi};
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) g.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
  g.back() = hi;
  return g;
}

inline std::vector<double> linear_grid(double first, double step, int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(first + step * i);
  return g;
}

struct DefaultGrids {
  std::vector<double> lasso;  // penalty lambda
  std::vector<double> imat;   // threshold factor c
  std::vector<double> iht;    // step mu
};

/// LASSO: decades 1e-4..1e2. IMAT: c = 1..10. IHT: ten log-spaced steps in
/// [1e-3, 1] * mu_safe, with mu_safe = 1 / sigma_max(X)^2 when the spectral
/// norm is known and 1 otherwise (the grid is then relative to mu_safe).
inline DefaultGrids default_grids(std::optional<double> x_spectral_norm = std::nullopt) {
  const double mu_safe = x_spectral_norm ? 1.0 / (*x_spectral_norm * *x_spectral_norm) : 1.0;
  DefaultGrids g{decade_grid(-4, 2), linear_grid(1.0, 1.0, 10), log_grid(1e-3, 1.0, 10)};
  for (double& mu : g.iht) mu *= mu_safe;
  return g;
}

inline std::vector<double> default_grid(Method m) {
  const DefaultGrids g = default_grids();
  switch (m) {
    case Method::imat: return g.imat;
    case Method::iht: return g.iht;
    case Method::lasso: return g.lasso;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Configuration of a run

struct SolverSettings {
  std::size_t imat_max_iters = 200;
  double imat_rel_tol = 1e-6;
  std::size_t iht_max_iters = 200;
  double iht_rel_tol = 1e-6;
  /// IHT keeps this many entries; 0 means "the true sparsity".
  Eigen::Index iht_sparsity = 0;
  std::size_t lasso_max_sweeps = 10000;
  double lasso_kkt_tol = 1e-6;
};

struct CompletionSettings {
  /// Candidate shrinkage values, searched from largest to smallest with warm starts.
  std::vector<double> grid = decade_grid(-4, 2);
  /// Fraction of observed entries held out to pick the shrinkage.
  double holdout_fraction = 0.1;
  /// Skip the search and use this shrinkage.
  std::optional<double> fixed_shrinkage;
  std::size_t max_iters = 200;
  double rel_tol = 1e-5;
  bool keep_observed = false;
};

struct MethodGrid {
  Method method = Method::imat;
  std::vector<double> grid;
};

struct SweepSpec {
  Method method = Method::imat;
  std::vector<double> grid;
  std::size_t trials = 20;
  Pipeline pipeline = Pipeline::raw;
  DatasetParams dataset;
};

struct ExperimentPlan {
  DatasetParams dataset;
  Pipeline pipeline = Pipeline::raw;
  std::size_t trials = 20;
  double train_ratio = 0.8;
  std::vector<MethodGrid> methods;
  SolverSettings solver;
  CompletionSettings completion;
};

struct SweepRecord {
  Method method = Method::imat;
  double parameter = 0.0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  std::vector<double> trial_rmses;
  double wall_time_seconds = 0.0;
  std::size_t failed_trials = 0;
};

inline void validate_grid(const std::vector<double>& grid, const char* who) {
  if (grid.empty()) throw InvalidInput(std::string(who) + ": grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || !(grid[i] > 0.0))
      throw InvalidInput(std::string(who) + ": grid values must be finite and positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw InvalidInput(std::string(who) + ": grid must be strictly increasing");
  }
}

inline void validate(const ExperimentPlan& plan) {
  validate(plan.dataset);
  if (plan.trials < 1) throw InvalidInput("experiment: trials must be >= 1");
  if (plan.methods.empty()) throw InvalidInput("experiment: no methods");
  for (const auto& mg : plan.methods) validate_grid(mg.grid, "experiment");
  if (plan.pipeline == Pipeline::precompleted) {
    const auto& c = plan.completion;
    if (!c.fixed_shrinkage) validate_grid(c.grid, "completion");
    if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0))
      throw InvalidInput("completion: holdout_fraction must lie in (0, 1)");
  }
}

inline ExperimentPlan plan_for(const SweepSpec& spec) {
  ExperimentPlan plan;
  plan.dataset = spec.dataset;
  plan.pipeline = spec.pipeline;
  plan.trials = spec.trials;
  plan.methods = {{spec.method, spec.grid}};
  return plan;
}

// ---------------------------------------------------------------------------
// One trial

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) {
  return mix_seed(base_seed, static_cast<std::uint64_t>(trial));
}

/// Shrinkage chosen by holding out a fraction of the observed entries and
/// walking the grid from largest to smallest with warm starts.
struct ShrinkageChoice {
  double shrinkage = 0.0;
  DenseMatrix warm_start;
};

inline ShrinkageChoice select_shrinkage(const MaskedMatrix& masked, const CompletionSettings& s,
                                        std::uint64_t seed) {
  MaskedMatrix fit = masked;
  DenseMatrix held = DenseMatrix::Zero(masked.mask.rows(), masked.mask.cols());
  Rng rng(seed);
  for (Eigen::Index i = 0; i < masked.mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < masked.mask.cols(); ++j) {
      if (masked.mask(i, j) != 0.0 && rng.bernoulli(s.holdout_fraction)) {
        held(i, j) = 1.0;
        fit.mask(i, j) = 0.0;
        fit.observed(i, j) = 0.0;
      }
    }
  }
  if (fit.mask.sum() < 1.0 || held.sum() < 1.0) {
    // Too few entries to validate; fall back to the smallest shrinkage.
    return {s.grid.front(), masked.observed};
  }

  CompletionConfig cc{0.0, s.max_iters, s.rel_tol, false};
  std::optional<DenseMatrix> warm;
  ShrinkageChoice best{s.grid.back(), masked.observed};
  double best_err = std::numeric_limits<double>::infinity();
  for (auto it = s.grid.rbegin(); it != s.grid.rend(); ++it) {
    cc.shrinkage = *it;
    CompletionResult r = soft_impute(fit, cc, warm);
    const double err =
        (held.array() * (r.completed - masked.observed).array()).matrix().squaredNorm();
    if (err < best_err) {
      best_err = err;
      best = {*it, r.completed};
    }
    warm = std::move(r.completed);
  }
  return best;
}

struct TrialData {
  Dataset dataset;
  SplitDataset split;
  double x_spectral_norm = 0.0;  // of split.train_x
  std::optional<double> completion_shrinkage;
};

inline TrialData prepare_trial(const ExperimentPlan& plan, std::uint64_t seed) {
  TrialData t;
  t.dataset = gen_dataset(plan.dataset, seed);
  DenseMatrix design = t.dataset.masked.observed;
  if (plan.pipeline == Pipeline::precompleted) {
    const auto& s = plan.completion;
    CompletionConfig cc{0.0, s.max_iters, s.rel_tol, s.keep_observed};
    std::optional<DenseMatrix> warm;
    if (s.fixed_shrinkage) {
      cc.shrinkage = *s.fixed_shrinkage;
    } else {
      ShrinkageChoice choice = select_shrinkage(t.dataset.masked, s, seed + 7);
      cc.shrinkage = choice.shrinkage;
      warm = std::move(choice.warm_start);
    }
    design = soft_impute(t.dataset.masked, cc, warm).completed;
    t.completion_shrinkage = cc.shrinkage;
  }
  t.split = split(design, t.dataset.labels, plan.train_ratio, seed + 6);
  t.x_spectral_norm = spectral_norm(t.split.train_x);
  return t;
}

/// Fit one method at one grid value on the training rows.
inline Vector fit(Method method, double parameter, const TrialData& t,
                  const SolverSettings& s, const GramProducts* pre = nullptr) {
  const auto& x = t.split.train_x;
  const auto& y = t.split.train_y;
  switch (method) {
    case Method::imat: {
      ImatConfig cfg;
      cfg.threshold = AdaptiveThreshold{parameter};
      cfg.max_iters = s.imat_max_iters;
      cfg.rel_tol = s.imat_rel_tol;
      cfg.x_spectral_norm = t.x_spectral_norm;
      return imat_recover(x, y, cfg, pre).beta_hat;
    }
    case Method::iht: {
      // The IHT grid is relative to the safe step 1 / sigma_max^2.
      IhtConfig cfg;
      cfg.sparsity = s.iht_sparsity > 0 ? s.iht_sparsity : t.dataset.params.sparsity;
      cfg.step = parameter / (t.x_spectral_norm * t.x_spectral_norm);
      cfg.max_iters = s.iht_max_iters;
      cfg.rel_tol = s.iht_rel_tol;
      cfg.x_spectral_norm = t.x_spectral_norm;
      return iht_recover(x, y, cfg, pre).beta_hat;
    }
    case Method::lasso: {
      LassoConfig cfg{parameter, s.lasso_max_sweeps, s.lasso_kkt_tol};
      return lasso_solve(x, y, cfg, pre).beta_hat;
    }
  }
  throw InvalidInput("fit: unknown method");
}

// ---------------------------------------------------------------------------
// Sweeps

using SweepLogger = std::function<void(const std::string&)>;

/// Whether fits of this method go through X^T X on this design.
inline bool uses_gram(Method method, const DenseMatrix& x) {
  return method == Method::lasso || x.rows() > x.cols();
}

/// One record per (method, grid value), methods in plan order and grid
/// values ascending. wall_time_seconds sums the fitting time only. Each
/// method computes the Gram products once per trial and reuses them across
/// its grid; that cost is charged to its first grid value.
inline std::vector<SweepRecord> run_experiment(const ExperimentPlan& plan,
                                               std::uint64_t base_seed,
                                               const SweepLogger& log = {}) {
  validate(plan);
  std::vector<SweepRecord> records;
  for (const auto& mg : plan.methods) {
    std::vector<double> grid = mg.grid;
    for (double p : grid) records.push_back(SweepRecord{mg.method, p});
  }

  std::size_t failed_setups = 0;
  for (std::size_t trial = 0; trial < plan.trials; ++trial) {
    std::optional<TrialData> data;
    try {
      data = prepare_trial(plan, trial_seed(base_seed, trial));
    } catch (const NumericalFailure&) {
      ++failed_setups;
      for (auto& r : records) ++r.failed_trials;
      continue;
    }
    std::optional<GramProducts> products;
    std::optional<Method> products_owner;
    for (auto& rec : records) {
      try {
        const auto start = std::chrono::steady_clock::now();
        if (products_owner != rec.method) {
          products.reset();
          products_owner = rec.method;
          if (uses_gram(rec.method, data->split.train_x))
            products = gram_products(data->split.train_x, data->split.train_y);
        }
        const Vector beta =
            fit(rec.method, rec.parameter, *data, plan.solver, products ? &*products : nullptr);
        rec.wall_time_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rec.trial_rmses.push_back(rmse(data->split.test_x * beta, data->split.test_y));
      } catch (const Divergence&) {
        ++rec.failed_trials;
      } catch (const NumericalFailure&) {
        ++rec.failed_trials;
      }
    }
  }

  for (auto& rec : records) {
    const auto k = rec.trial_rmses.size();
    if (k == 0) {
      rec.mean_rmse = std::numeric_limits<double>::quiet_NaN();
      rec.std_rmse = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    rec.mean_rmse = std::accumulate(rec.trial_rmses.begin(), rec.trial_rmses.end(), 0.0) /
                    static_cast<double>(k);
    double ss = 0.0;
    for (double v : rec.trial_rmses) ss += (v - rec.mean_rmse) * (v - rec.mean_rmse);
    rec.std_rmse = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
  }

  if (log) {
    for (const auto& mg : plan.methods) {
      double best = std::numeric_limits<double>::infinity();
      double arg = 0.0;
      std::size_t failed = 0;
      for (const auto& r : records) {
        if (r.method != mg.method) continue;
        failed += r.failed_trials;
        if (r.mean_rmse < best) best = r.mean_rmse, arg = r.parameter;
      }
      log(std::string(to_string(mg.method)) + ": min mean RMSE " + std::to_string(best) +
          " at " + std::to_string(arg) + ", failed fits " + std::to_string(failed) +
          (failed_setups ? ", failed trials " + std::to_string(failed_setups) : ""));
    }
  }
  return records;
}

inline std::vector<SweepRecord> run_sweep(const SweepSpec& spec, std::uint64_t base_seed) {
  return run_experiment(plan_for(spec), base_seed);
}

/// Smallest mean RMSE over the records of one method (NaN-free records only).
inline double min_mean_rmse(const std::vector<SweepRecord>& records, Method m) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records)
    if (r.method == m && std::isfinite(r.mean_rmse)) best = std::min(best, r.mean_rmse);
  return best;
}

/// Total fitting time over the whole grid and all trials; data generation,
/// completion and the spectral norm used for step sizes are excluded.
inline double time_training(const SweepSpec& spec, std::uint64_t base_seed) {
  const auto records = run_sweep(spec, base_seed);
  double total = 0.0;
  for (const auto& r : records) total += r.wall_time_seconds;
  return total;
}

}  // namespace sparsemiss
