// sparsemiss: run sparse-recovery benchmarks on synthetic data with missing
// entries.
//
//   sparsemiss run      --config cfg.json [--seed N] [--trials N] [--out results.csv]
//   sparsemiss sweep    --config cfg.json [...]         (also writes <out>.curves)
//   sparsemiss timings  [--config cfg.json] [--out table.txt]
//   sparsemiss verify   [--cases N] [--seed N]
//   sparsemiss generate --config cfg.json --out data.bin
//
// Every run writes <out>.meta.json next to its main output. Exit status is 0
// on success, 1 for usage or configuration errors, 2 for numerical failures.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sparsemiss/config.hpp"
#include "sparsemiss/io.hpp"
#include "sparsemiss/properties.hpp"
#include "sparsemiss/report.hpp"

namespace {

using namespace sparsemiss;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<std::string> pipeline;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "experiment config (JSON); metadata files replay");
  if (config_required) opt->required();
  cmd->add_option("--seed", f.seed, "base seed (overrides config)");
  cmd->add_option("--trials", f.trials, "trials per grid value (overrides config)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output path (overrides config)");
  cmd->add_option("--pipeline", f.pipeline, "raw or precompleted (overrides config)")
      ->check(CLI::IsMember({"raw", "precompleted"}));
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig rc = f.config.empty() ? default_run_config() : parse_config(f.config);
  if (f.seed) rc.base_seed = *f.seed;
  if (f.trials) rc.plan.trials = *f.trials;
  if (f.out) rc.output_path = *f.out;
  if (f.pipeline) rc.plan.pipeline = *parse_pipeline(*f.pipeline);
  validate(rc.plan);
  return rc;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_minima(const std::vector<SweepRecord>& records, const RunConfig& rc) {
  for (const auto& mg : rc.plan.methods) {
    const SweepRecord* best = nullptr;
    for (const auto& r : records)
      if (r.method == mg.method && std::isfinite(r.mean_rmse) && (!best || r.mean_rmse < best->mean_rmse))
        best = &r;
    if (best)
      std::printf("%-6s minimum mean RMSE %s at parameter %s\n",
                  std::string(to_string(mg.method)).c_str(), format_g6(best->mean_rmse).c_str(),
                  format_g6(best->parameter).c_str());
    else
      std::printf("%-6s no successful trials\n", std::string(to_string(mg.method)).c_str());
  }
}

int run_experiment_command(const CommonFlags& flags, const std::string& command, bool curves) {
  const RunConfig rc = resolve(flags);
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = run_experiment(rc.plan, rc.base_seed, [](const std::string& line) {
    std::cerr << "[sweep] " << line << "\n";
  });
  const double elapsed = seconds_since(t0);

  emit_csv(records, rc.output_path, rc.record_wall_time);
  if (curves) write_text(rc.output_path + ".curves", format_curves(records));
  emit_metadata({command, rc, records, elapsed}, rc.output_path + ".meta.json");
  print_minima(records, rc);

  for (const auto& r : records)
    if (r.trial_rmses.empty()) return kExitNumerical;
  return kExitOk;
}

int timings_command(const CommonFlags& flags) {
  RunConfig rc = resolve(flags);
  if (!flags.out) rc.output_path = "timings.txt";
  if (flags.trials) rc.timings.trials = *flags.trials;
  const auto t0 = std::chrono::steady_clock::now();
  const auto configs = default_timing_configs(rc);
  const auto rows = measure_runtimes(configs);
  const std::string table = format_runtime_table(rows, machine_descriptor());
  std::cout << table;
  write_text(rc.output_path, table);
  emit_metadata({"timings", rc, {}, seconds_since(t0)}, rc.output_path + ".meta.json");
  return kExitOk;
}

int verify_command(std::size_t cases, std::uint64_t seed) {
  bool ok = true;
  for (const auto& rep : run_property_suite(cases, seed)) {
    std::printf("[%s] %s (%zu cases", rep.passed() ? "PASS" : "FAIL", rep.name.c_str(), rep.cases);
    if (rep.failures) std::printf(", %zu failed; %s", rep.failures, rep.first_failure.c_str());
    std::printf(")\n");
    ok = ok && rep.passed();
  }
  return ok ? kExitOk : kExitNumerical;
}

int generate_command(const CommonFlags& flags) {
  const RunConfig rc = resolve(flags);
  const std::string path = flags.out ? *flags.out : "dataset.bin";
  save_dataset(gen_dataset(rc.plan.dataset, rc.base_seed), path);
  std::printf("wrote %s (m=%ld, n=%ld, seed %llu)\n", path.c_str(),
              static_cast<long>(rc.plan.dataset.m), static_cast<long>(rc.plan.dataset.n),
              static_cast<unsigned long long>(rc.base_seed));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse recovery (IMAT, IHT, LASSO) on data with missing entries"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, timing_flags, gen_flags;
  auto* run = app.add_subcommand("run", "run one config and write the results CSV");
  add_common(run, run_flags, true);
  auto* sweep = app.add_subcommand("sweep", "run a config and write CSV plus plot-ready curves");
  add_common(sweep, sweep_flags, true);
  auto* timings = app.add_subcommand("timings", "time IMAT against LASSO over the size table");
  add_common(timings, timing_flags, false);
  auto* gen = app.add_subcommand("generate", "write the dataset of a config to a binary file");
  add_common(gen, gen_flags, true);

  std::size_t verify_cases = 100;
  std::uint64_t verify_seed = 2024;
  auto* verify = app.add_subcommand("verify", "run the randomized property suites");
  verify->add_option("--cases", verify_cases, "random cases per property")->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "seed for the random cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return run_experiment_command(run_flags, "run", false);
    if (*sweep) return run_experiment_command(sweep_flags, "sweep", true);
    if (*timings) return timings_command(timing_flags);
    if (*verify) return verify_command(verify_cases, verify_seed);
    if (*gen) return generate_command(gen_flags);
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Divergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
