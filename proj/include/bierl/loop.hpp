#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bierl/es.hpp"
#include "bierl/meta_npm.hpp"
#include "bierl/meta_pm.hpp"
#include "bierl/nn.hpp"
#include "bierl/tasks.hpp"

namespace bierl {

enum class Mode { baseline_fixed, pm, npm };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// Everything that defines one seeded run, except the task.
struct LoopConfig {
  Mode mode = Mode::pm;
  EsConfig es;
  MetaEsConfig meta;
  BoConfig bo;
  HyperRanges ranges;
  /// H before the meta level has produced anything (and for the whole
  /// baseline run).
  HyperParams initial{0.05, 0.02};
  int lstm_hidden = 64;
  int generator_hidden = 32;
  std::uint64_t seed = 1;

  void validate() const;
  nn::LstmSpec encoder_spec() const;
  nn::MlpSpec generator_spec() const;
};

/// One row of the per-iteration log.
struct RunRecord {
  std::int64_t iteration = 0;
  /// f(theta_t), unperturbed, before this iteration's update.
  double ret = 0.0;
  double pop_mean = 0.0;
  double pop_max = 0.0;
  /// H used for this iteration's update.
  double sigma = 0.0;
  double alpha = 0.0;
  std::uint64_t inner_evals = 0;
  std::uint64_t lookahead_evals = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
};

/// Complete state between two inner iterations. All randomness is derived
/// from (seed, counters), so this is all a resume needs.
struct RunState {
  ParamVector theta;
  std::optional<nn::MetaModel> meta;
  PopulationReplayBuffer buffer;
  BoState bo;
  HyperParams h;
  std::int64_t iteration = 0;
  std::uint64_t inner_evals = 0;
  std::uint64_t lookahead_evals = 0;
  std::uint64_t meta_updates = 0;
  std::vector<std::string> diagnostics;
};

class Runner {
public:
  Runner(LoopConfig cfg, const Task& task);

  const LoopConfig& config() const { return cfg_; }

  /// Fresh state; `warm_meta` replaces the random meta initialization
  /// (PM only) and must match the encoder/generator specs.
  RunState initial_state(std::optional<nn::MetaModel> warm_meta = std::nullopt) const;

  /// One inner iteration, followed by the meta-level step when it closes
  /// an interval of k iterations.
  RunRecord step(RunState& state) const;

  using RecordSink = std::function<void(const RunRecord&, const RunState&)>;

  /// Steps until state.iteration == total_iterations.
  void run(RunState& state, std::int64_t total_iterations, const RecordSink& sink = {}) const;

  /// Expected evaluation counters after `iterations` inner iterations.
  std::uint64_t expected_inner_evals(std::int64_t iterations) const;
  std::uint64_t expected_lookahead_evals(std::int64_t iterations) const;

private:
  void meta_step(RunState& state, std::int64_t t) const;

  LoopConfig cfg_;
  const Task* task_;
  FitnessFn fitness_;
};

struct LoopResult {
  ParamVector theta;
  std::optional<nn::MetaModel> meta;
  std::vector<RunRecord> records;
};

/// Parametric meta-level loop from explicit starting points.
LoopResult integrated_loop(const ParamVector& theta0, const nn::MetaModel& meta0,
                           const LoopConfig& cfg, const Task& task, std::int64_t total_iterations);

/// Nonparametric (BO) meta-level loop.
LoopResult npm_integrated_loop(const ParamVector& theta0, const LoopConfig& cfg, const Task& task,
                               std::int64_t total_iterations);

/// Fixed-H ES.
LoopResult baseline_loop(const ParamVector& theta0, const LoopConfig& cfg, const Task& task,
                         std::int64_t total_iterations);

}  // namespace bierl
