// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit if
// any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sparsemiss/completion.hpp"
#include "sparsemiss/config.hpp"
#include "sparsemiss/experiment.hpp"
#include "sparsemiss/properties.hpp"
#include "sparsemiss/report.hpp"
#include "sparsemiss/solvers.hpp"

using namespace sparsemiss;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ExperimentPlan raw_plan(DatasetParams d, std::size_t trials, std::vector<Method> methods) {
  ExperimentPlan plan;
  plan.dataset = d;
  plan.trials = trials;
  for (Method m : methods) plan.methods.push_back({m, default_grid(m)});
  return plan;
}

constexpr std::uint64_t kSeeds[10] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

// 1. Fig. 3 ordering IMAT < IHT < LASSO in >= 8 of 10 seeds.
Outcome fig3_ordering() {
  const auto plan = raw_plan({1000, 500, 50, 8, 0.5, 0.1}, 20, {Method::imat, Method::iht, Method::lasso});
  int wins = 0;
  std::string seen;
  for (std::uint64_t seed : kSeeds) {
    const auto recs = run_experiment(plan, seed);
    const double imat = min_mean_rmse(recs, Method::imat), iht = min_mean_rmse(recs, Method::iht),
                 lasso = min_mean_rmse(recs, Method::lasso);
    wins += imat < iht && iht < lasso;
    if (seed == kSeeds[0])
      seen = "seed 1: imat " + fmt("%.4f", imat) + ", iht " + fmt("%.4f", iht) + ", lasso " + fmt("%.4f", lasso);
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds ordered; " + seen};
}

// 2. Fig. 6: IMAT below LASSO in >= 8 of 10 seeds.
Outcome fig6_gap() {
  const auto plan = raw_plan({1000, 100, 20, 8, 0.5, 0.1}, 20, {Method::imat, Method::lasso});
  int wins = 0;
  std::string seen;
  for (std::uint64_t seed : kSeeds) {
    const auto recs = run_experiment(plan, seed);
    const double imat = min_mean_rmse(recs, Method::imat), lasso = min_mean_rmse(recs, Method::lasso);
    wins += imat < lasso;
    if (seed == kSeeds[0]) seen = "seed 1: imat " + fmt("%.4f", imat) + ", lasso " + fmt("%.4f", lasso);
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds with IMAT < LASSO; " + seen};
}

// 3. Fig. 8: after completion the LASSO/IMAT gap is at most a quarter of the raw gap.
Outcome fig8_equalization() {
  constexpr std::size_t kTrials = 5;
  const DatasetParams d{500, 200, 50, 8, 0.8, 0.1};
  double raw_gap = 0.0, pre_gap = 0.0;
  for (std::uint64_t seed : kSeeds) {
    auto plan = raw_plan(d, kTrials, {Method::imat, Method::lasso});
    auto recs = run_experiment(plan, seed);
    raw_gap += std::abs(min_mean_rmse(recs, Method::lasso) - min_mean_rmse(recs, Method::imat)) / 10.0;
    plan.pipeline = Pipeline::precompleted;
    recs = run_experiment(plan, seed);
    pre_gap += std::abs(min_mean_rmse(recs, Method::lasso) - min_mean_rmse(recs, Method::imat)) / 10.0;
  }
  return {pre_gap <= 0.25 * raw_gap, "mean gap precompleted " + fmt("%.3g", pre_gap) + " vs raw " +
                                         fmt("%.3g", raw_gap) + " (ratio " + fmt("%.3g", pre_gap / raw_gap) +
                                         ", " + std::to_string(kTrials) + " trials per seed)"};
}

// 4. Coordinate descent equals the closed form on orthonormal designs.
Outcome lasso_oracle() {
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t c = 0; c < 100; ++c) {
    Rng rng(mix_seed(4004, c));
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(30));
    const Eigen::Index m = n + static_cast<Eigen::Index>(rng.below(40));
    DenseMatrix g(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.gaussian();
    const DenseMatrix x = orthonormalize(g);
    Vector y(m);
    for (auto& v : y) v = rng.gaussian();
    const double lambda = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
    const auto res = lasso_solve(x, y, {lambda, 10000, 1e-12});
    const double err = (res.beta_hat - oracle::orthonormal_lasso(x, y, lambda)).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    ok += err <= 1e-8;
  }
  return {ok == 100, std::to_string(ok) + "/100 within 1e-8, worst " + fmt("%.2e", worst)};
}

// 5. Best-subset support on tiny well-conditioned noiseless instances.
Outcome best_subset() {
  int imat_hits = 0, iht_hits = 0;
  double worst_cond = 0.0;
  for (std::uint64_t c = 0; c < 50; ++c) {
    const std::uint64_t seed = mix_seed(5005, c);
    Rng rng(seed);
    const DenseMatrix x = oracle::conditioned_design(20, 8, 3.0, [&rng] { return rng.gaussian(); });
    worst_cond = std::max(worst_cond, oracle::condition_number(x));
    const Vector beta = gen_sparse_beta(8, 2, seed + 1).values;
    const Vector y = x * beta;
    const auto best = oracle::best_subset_support(x, y, 2);

    double best_res = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> chosen;
    for (double cth : default_grid(Method::imat)) {
      ImatConfig cfg;
      cfg.threshold = AdaptiveThreshold{cth};
      const auto r = imat_recover(x, y, cfg);
      const double res = (y - x * r.beta_hat).norm();
      if (res < best_res) best_res = res, chosen = support(r.beta_hat);
    }
    imat_hits += chosen == best;

    IhtConfig hc;
    hc.sparsity = 2;
    iht_hits += support(iht_recover(x, y, hc).beta_hat) == best;
  }
  return {worst_cond < 3.0 && imat_hits >= 45 && iht_hits >= 45,
          "IMAT " + std::to_string(imat_hits) + "/50, IHT " + std::to_string(iht_hits) +
              "/50, max condition number " + fmt("%.3f", worst_cond)};
}

// 6. Soft-impute monotonicity and rank-1 completion.
Outcome soft_impute_props() {
  int monotone = 0;
  std::size_t iterations = 0;
  for (std::uint64_t c = 0; c < 20; ++c) {
    const std::uint64_t seed = mix_seed(6006, c);
    const DenseMatrix x = gen_low_rank(40, 30, 5, seed);
    const MaskedMatrix mm = apply_mask(x, 0.7, seed + 3);
    const auto res = soft_impute(mm, {0.01 * static_cast<double>(c + 1), 200, 1e-9, false});
    bool ok = true;
    for (std::size_t k = 1; k < res.objective_trace.size(); ++k)
      ok = ok && res.objective_trace[k] <= res.objective_trace[k - 1] * (1.0 + 1e-12);
    monotone += ok;
    iterations += res.objective_trace.size();
  }
  const DenseMatrix x = gen_low_rank(10, 10, 1, 0);
  const MaskedMatrix mm = apply_mask(x, 0.7, 1000);
  const DenseMatrix z = soft_impute(mm, {1e-4, 50000, 1e-12, false}).completed;
  const auto miss = 1.0 - mm.mask.array();
  const double err = (miss * (z - x).array()).matrix().norm() / (miss * x.array()).matrix().norm();
  return {monotone == 20 && err < 0.05, std::to_string(monotone) + "/20 runs monotone over " +
                                            std::to_string(iterations) + " iterations; rank-1 missing-entry error " +
                                            fmt("%.2e", err)};
}

// 7. Randomized invariant suites.
Outcome invariants() {
  bool ok = true;
  std::string detail;
  for (const auto& rep : run_property_suite(100, 7007)) {
    ok = ok && rep.passed() && rep.cases >= 100;
    if (!detail.empty()) detail += "; ";
    detail += rep.name + " " + std::to_string(rep.cases - rep.failures) + "/" + std::to_string(rep.cases);
  }
  return {ok, detail};
}

// 8. Table 1 pattern: IMAT within 2x of LASSO everywhere, faster on most rows.
Outcome runtime_pattern() {
  const auto configs = default_timing_configs(default_run_config());
  const auto rows = measure_runtimes(configs);
  std::size_t faster = 0;
  bool within = true;
  std::string detail;
  for (const auto& r : rows) {
    faster += r.imat_seconds < r.lasso_seconds;
    within = within && r.imat_seconds <= 2.0 * r.lasso_seconds;
    detail += "m=" + std::to_string(r.m) + ",n=" + std::to_string(r.n) + " " + fmt("%.4f", r.imat_seconds) +
              "/" + fmt("%.4f", r.lasso_seconds) + "s; ";
  }
  detail += "IMAT faster on " + std::to_string(faster) + "/" + std::to_string(rows.size());
  return {within && 2 * faster > rows.size(), detail};
}

// 9. Same config and seed give byte-identical CSV.
Outcome determinism() {
  RunConfig rc = default_run_config();
  rc.plan.trials = 3;
  std::string detail;
  bool ok = true;
  for (Pipeline p : {Pipeline::raw, Pipeline::precompleted}) {
    rc.plan.pipeline = p;
    const std::string a = format_csv(run_experiment(rc.plan, 17), rc.record_wall_time);
    const std::string b = format_csv(run_experiment(rc.plan, 17), rc.record_wall_time);
    ok = ok && a == b;
    detail += std::string(to_string(p)) + (a == b ? " identical" : " DIFFERS") + " (" +
              std::to_string(a.size()) + " bytes); ";
  }
  RunConfig replay = parse_config_json(to_json(rc));
  const std::string a = format_csv(run_experiment(rc.plan, 17), false);
  const std::string b = format_csv(run_experiment(replay.plan, 17), false);
  ok = ok && a == b;
  detail += std::string("replay from serialized config ") + (a == b ? "identical" : "DIFFERS");
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Fig. 3 ordering IMAT < IHT < LASSO", fig3_ordering},
      {"Fig. 6 IMAT below LASSO", fig6_gap},
      {"Fig. 8 completion equalizes LASSO and IMAT", fig8_equalization},
      {"LASSO closed-form oracle", lasso_oracle},
      {"best-subset support oracle", best_subset},
      {"soft-impute properties", soft_impute_props},
      {"invariant suites", invariants},
      {"runtime pattern", runtime_pattern},
      {"CSV determinism", determinism}};

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %d. %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
