#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bierl/config.hpp"
#include "bierl/loop.hpp"

namespace bierl {

/// Column order of the per-run CSV. Wall-clock time goes to a separate
/// `.timing.csv` so identical runs give identical files.
inline constexpr const char* kCsvHeader =
    "iteration,return,pop_mean,pop_max,sigma,alpha,inner_evals,lookahead_evals,seed";

/// Shortest text that parses back to the same double.
std::string format_double(double v);
std::string csv_row(const RunRecord& r);
void write_run_csv(const std::string& path, const std::vector<RunRecord>& records);
/// wall_ms is left at 0.
std::vector<RunRecord> read_run_csv(const std::string& path);

struct Stat {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double std = 0.0;
  std::vector<double> values;
};
Stat describe(const std::vector<double>& values);

double area_under_curve(const std::vector<RunRecord>& records);

/// Iterations after each shift until f(theta) >= -fraction * shift_norm^2,
/// censored at the shift period (or at the end of the run).
std::vector<int> recovery_iterations(const std::vector<RunRecord>& records, const FitnessTask& task,
                                     double fraction);

struct ModeSummary {
  Mode mode = Mode::baseline_fixed;
  int population = 0;
  std::uint64_t inner_evals = 0;
  std::uint64_t lookahead_evals = 0;
  std::uint64_t pretrain_evals = 0;
  std::uint64_t total_evals = 0;
  Stat final_return;
  Stat auc;
  std::vector<int> recovery;
  std::optional<double> recovery_median;
  std::vector<std::string> csv_files;
};

struct ExperimentResult {
  std::vector<ModeSummary> modes;
  /// Records per (mode, seed), in config order.
  std::vector<std::vector<std::vector<RunRecord>>> records;
  nlohmann::json summary;
  std::vector<std::string> failures;

  const ModeSummary* find(Mode mode) const;
  const std::vector<std::vector<RunRecord>>* runs(Mode mode) const;
};

/// Nominal evaluations of one run of `mode` (pretraining excluded).
std::uint64_t run_budget(const LoopConfig& cfg, std::int64_t iterations);

/// Runs every (mode, seed) pair, writes `<mode>_seed<s>.csv`,
/// `<mode>_seed<s>.timing.csv` and `summary.json` under cfg.output_dir.
/// Failed runs are listed in `failures`; the others are still summarized.
ExperimentResult run_experiment(const RunConfig& cfg, std::ostream* log = nullptr);

struct SweepResult {
  std::string axis;
  std::vector<double> values;
  std::vector<ExperimentResult> results;
  std::vector<std::string> warnings;
  std::string table_path;
};

/// Runs run_experiment once per distinct sweep value (ascending) in
/// `<output_dir>/<axis>_<value>` and writes `sweep_<axis>.csv`.
SweepResult run_sweep(const RunConfig& cfg, std::ostream* log = nullptr);

/// Continues a checkpointed run to `total_iterations`, writing the new rows
/// to `<output_dir>/<mode>_seed<s>.resumed.csv`.
std::vector<RunRecord> resume_run(const std::string& checkpoint_path, std::int64_t total_iterations,
                                  const std::string& output_dir, int checkpoint_every = 0);

/// Warm-start meta model for PM runs of `cfg`: loaded, or pretrained (and
/// saved when configured). Returns nullopt when disabled.
struct WarmStart {
  nn::MetaModel meta;
  std::uint64_t evaluations = 0;
};
std::optional<WarmStart> prepare_warm_start(const RunConfig& cfg);

}  // namespace bierl
