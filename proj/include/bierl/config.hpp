#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bierl/loop.hpp"
#include "bierl/tasks.hpp"

namespace bierl {

enum class Profile { quickstart, paper_scale };

std::string to_string(Profile profile);
Profile profile_from_string(const std::string& name);

struct WarmStartConfig {
  /// PM runs start from a pretrained meta model.
  bool enabled = true;
  /// Meta updates spent on the pretraining task.
  int meta_updates = 10;
  FitnessTask task{.kind = TaskKind::sphere, .dim = 10, .init = 5.0};
  std::uint64_t seed = 999;
  /// Read the meta model from here instead of pretraining.
  std::string load_path;
  /// Write the pretrained meta model here.
  std::string save_path;
};

struct SweepConfig {
  /// One of n, m, omega, beta, k, l.
  std::string axis;
  std::vector<double> values;
};

struct RunConfig {
  Profile profile = Profile::quickstart;
  FitnessTask task;
  /// Fixed task seed; otherwise each run uses its own seed.
  std::optional<std::uint64_t> task_seed;
  std::vector<Mode> modes{Mode::baseline_fixed, Mode::pm, Mode::npm};
  /// es, meta, bo, ranges, initial H and meta widths. `loop.seed` and
  /// `loop.mode` are set per run.
  LoopConfig loop;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::int64_t total_iterations = 200;
  std::string output_dir = "bierl_out";
  /// Enlarge the baseline population to the largest adaptive budget.
  bool match_budget = true;
  /// Write a resumable checkpoint every N iterations (0 = never).
  int checkpoint_every = 0;
  /// Concurrent (mode, seed) runs; 0 reads BIERL_WORKERS.
  int workers = 0;
  double recovery_fraction = 0.01;
  bool dump_bo = false;
  WarmStartConfig warm;
  std::optional<SweepConfig> sweep;

  void validate() const;
  /// Loop configuration of one (mode, seed) run.
  LoopConfig loop_for(Mode mode, std::uint64_t seed) const;
  /// Task of one run.
  FitnessTask task_for(std::uint64_t seed) const;
};

RunConfig profile_defaults(Profile profile);

/// Parses `[section]` / `key = value` text on top of the profile defaults.
/// A `profile` key in `[run]` selects the defaults unless `profile` is
/// given. Unknown keys and malformed values throw ConfigError naming the
/// line and key.
RunConfig parse_config(const std::string& text, std::optional<Profile> profile = std::nullopt);
RunConfig load_config(const std::string& path, std::optional<Profile> profile = std::nullopt);

/// Applies `section.key=value` on top of an existing config.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Fully qualified keys accepted by the parser.
std::vector<std::string> config_keys();

nlohmann::json to_json(const FitnessTask& task);
FitnessTask task_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LoopConfig& cfg);
LoopConfig loop_from_json(const nlohmann::json& j);

}  // namespace bierl
