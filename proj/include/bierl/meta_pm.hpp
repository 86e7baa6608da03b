#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bierl/es.hpp"
#include "bierl/hyperparams.hpp"
#include "bierl/nn.hpp"

namespace bierl {

/// Fitness rows of the last k inner iterations, oldest first.
class PopulationReplayBuffer {
public:
  PopulationReplayBuffer() = default;
  PopulationReplayBuffer(int capacity, int width);

  /// Appends a row, evicting the oldest once `capacity` rows are held.
  /// Rows must have length `width` and strictly increasing iterations.
  void push(const PopulationFitness& row);

  bool empty() const { return rows_.empty(); }
  std::size_t size() const { return rows_.size(); }
  int capacity() const { return capacity_; }
  int width() const { return width_; }
  const std::deque<PopulationFitness>& rows() const { return rows_; }

  /// capacity x width matrix. Before the buffer is full the oldest row is
  /// repeated at the top. Throws StateError when empty.
  Eigen::MatrixXd window() const;

private:
  int capacity_ = 10;
  int width_ = 0;
  std::deque<PopulationFitness> rows_;
};

struct MetaEsConfig {
  int population = 200;
  double learning_rate = 0.006;
  double noise = 0.05;
  int repeats = 3;
  int interval = 10;
  Shaping shaping = Shaping::centered_rank;
  /// Lookahead repetition i uses the same inner noise for every meta
  /// candidate j (common random numbers), so F_j differ only through H.
  bool common_lookahead_noise = true;
  int workers = 1;

  void validate() const;
};

/// H = generator(encoder(S_t)).
HyperParams propose_hyperparams(const nn::MetaModel& meta, const PopulationReplayBuffer& buffer,
                                const HyperRanges& ranges);

/// Everything a one-step lookahead needs besides H and theta.
struct LookaheadContext {
  const EsConfig* es = nullptr;
  const FitnessFn* fitness = nullptr;
  /// Landscape index the lookahead is evaluated on.
  std::int64_t iteration = 0;
  /// Repetition i draws its inner noise from derive(seed, {i}).
  std::uint64_t seed = 0;
  bool allow_zero_sigma = false;
};

/// Mean over `repeats` of f(theta after one ES step with H). Each repeat
/// costs population + 1 evaluations. theta is never modified.
double one_step_return(const HyperParams& h, const ParamVector& theta, int repeats,
                       const LookaheadContext& ctx);

/// Truncated meta fitness of a (perturbed) meta model.
double estimate_meta_fitness(const nn::MetaModel& meta, const ParamVector& theta,
                             const PopulationReplayBuffer& buffer, const HyperRanges& ranges,
                             int repeats, const LookaheadContext& ctx);

struct MetaUpdateResult {
  Eigen::VectorXd params;
  std::vector<double> fitness;
  bool ok = true;
  std::string diagnostic;
};

/// Seeds for one meta update: eps_j from derive(noise_seed, {j}); lookahead
/// j from derive(lookahead_seed, {j}), or lookahead_seed itself for every j
/// when common_lookahead_noise is set.
struct MetaUpdateSeeds {
  std::uint64_t noise_seed = 0;
  std::uint64_t lookahead_seed = 0;
};

/// Standard-normal perturbation direction j of a meta update.
Eigen::VectorXd meta_noise(std::uint64_t noise_seed, std::size_t j, Eigen::Index dim);

/// vartheta + beta / (m omega) * sum_j s(F_j) eps_j. On any lookahead
/// failure the input parameters are returned unchanged with ok = false.
MetaUpdateResult meta_es_update(const nn::MetaModel& meta, const ParamVector& theta,
                                const PopulationReplayBuffer& buffer, const MetaEsConfig& cfg,
                                const HyperRanges& ranges, const EsConfig& es,
                                const FitnessFn& fitness, std::int64_t iteration,
                                const MetaUpdateSeeds& seeds);

}  // namespace bierl
