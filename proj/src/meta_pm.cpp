#include "bierl/meta_pm.hpp"

#include <cmath>
#include <exception>

#include "bierl/errors.hpp"
#include "bierl/parallel.hpp"
#include "bierl/rng.hpp"

namespace bierl {

PopulationReplayBuffer::PopulationReplayBuffer(int capacity, int width)
    : capacity_(capacity), width_(width) {
  if (capacity < 1) throw ConfigError("replay buffer capacity must be >= 1");
  if (width < 1) throw ConfigError("replay buffer width must be >= 1");
}

void PopulationReplayBuffer::push(const PopulationFitness& row) {
  if (static_cast<int>(row.values.size()) != width_)
    throw InvariantError("fitness row has length " + std::to_string(row.values.size()) +
                         ", buffer width is " + std::to_string(width_));
  if (!rows_.empty() && row.iteration <= rows_.back().iteration)
    throw InvariantError("replay buffer rows must have increasing iterations");
  rows_.push_back(row);
  while (static_cast<int>(rows_.size()) > capacity_) rows_.pop_front();
}

Eigen::MatrixXd PopulationReplayBuffer::window() const {
  if (rows_.empty()) throw StateError("replay buffer is empty");
  Eigen::MatrixXd out(capacity_, width_);
  const int pad = capacity_ - static_cast<int>(rows_.size());
  for (int r = 0; r < capacity_; ++r) {
    const auto& row = rows_[static_cast<std::size_t>(std::max(0, r - pad))];
    for (int c = 0; c < width_; ++c) out(r, c) = row.values[static_cast<std::size_t>(c)];
  }
  return out;
}

void MetaEsConfig::validate() const {
  if (population < 2) throw ConfigError("meta population must be >= 2");
  if (!(learning_rate >= 0.0)) throw ConfigError("meta learning_rate must be >= 0");
  if (!(noise > 0.0)) throw ConfigError("meta noise must be > 0");
  if (repeats < 1) throw ConfigError("meta repeats must be >= 1");
  if (interval < 1) throw ConfigError("meta interval must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

HyperParams propose_hyperparams(const nn::MetaModel& meta, const PopulationReplayBuffer& buffer,
                                const HyperRanges& ranges) {
  if (buffer.empty()) throw StateError("cannot propose hyperparameters from an empty buffer");
  return meta.propose(buffer.window(), ranges);
}

double one_step_return(const HyperParams& h, const ParamVector& theta, int repeats,
                       const LookaheadContext& ctx) {
  if (repeats < 1) throw ConfigError("lookahead repeats must be >= 1");
  EsConfig es = *ctx.es;
  es.workers = 1;
  double sum = 0.0;
  for (int i = 0; i < repeats; ++i) {
    const auto seed = rng::derive(ctx.seed, {static_cast<std::uint64_t>(i)});
    try {
      const auto step = es_step(theta, es, h, *ctx.fitness,
                                {seed, ctx.iteration, false, ctx.allow_zero_sigma});
      const double value = (*ctx.fitness)(step.theta, {ctx.iteration, rng::derive(seed, {rng::kEval})});
      if (!std::isfinite(value))
        throw EvaluationError("non-finite fitness after lookahead step", -1, i);
      sum += value;
    } catch (const EvaluationError& e) {
      throw EvaluationError(std::string(e.what()) + " (lookahead repetition " + std::to_string(i) + ")",
                            e.index(), i);
    }
  }
  return sum / repeats;
}

double estimate_meta_fitness(const nn::MetaModel& meta, const ParamVector& theta,
                             const PopulationReplayBuffer& buffer, const HyperRanges& ranges,
                             int repeats, const LookaheadContext& ctx) {
  const HyperParams h = propose_hyperparams(meta, buffer, ranges);
  return one_step_return(h, theta, repeats, ctx);
}

Eigen::VectorXd meta_noise(std::uint64_t noise_seed, std::size_t j, Eigen::Index dim) {
  auto eng = rng::engine(rng::derive(noise_seed, {static_cast<std::uint64_t>(j)}));
  Eigen::VectorXd eps(dim);
  rng::fill_normal(eng, {eps.data(), static_cast<std::size_t>(dim)});
  return eps;
}

MetaUpdateResult meta_es_update(const nn::MetaModel& meta, const ParamVector& theta,
                                const PopulationReplayBuffer& buffer, const MetaEsConfig& cfg,
                                const HyperRanges& ranges, const EsConfig& es,
                                const FitnessFn& fitness, std::int64_t iteration,
                                const MetaUpdateSeeds& seeds) {
  cfg.validate();
  if (buffer.empty()) throw StateError("meta update needs at least one buffered fitness row");
  const auto m = static_cast<std::size_t>(cfg.population);
  const Eigen::Index dim = meta.flat().size();

  MetaUpdateResult out;
  out.params = meta.flat();
  out.fitness.assign(m, 0.0);
  try {
    parallel_for(m, cfg.workers, [&](std::size_t j) {
      nn::MetaModel candidate = meta;
      candidate.flat() += cfg.noise * meta_noise(seeds.noise_seed, j, dim);
      const auto seed = cfg.common_lookahead_noise
                            ? seeds.lookahead_seed
                            : rng::derive(seeds.lookahead_seed, {static_cast<std::uint64_t>(j)});
      LookaheadContext ctx{&es, &fitness, iteration, seed};
      out.fitness[j] = estimate_meta_fitness(candidate, theta, buffer, ranges, cfg.repeats, ctx);
    });
  } catch (const std::exception& e) {
    out.ok = false;
    out.diagnostic = std::string("meta update skipped: ") + e.what();
    return out;
  }

  // second pass regenerates eps_j so large meta models never hold m copies
  const auto shaped = shape_fitness(out.fitness, cfg.shaping);
  Eigen::VectorXd step = Eigen::VectorXd::Zero(dim);
  for (std::size_t j = 0; j < m; ++j) step += shaped[j] * meta_noise(seeds.noise_seed, j, dim);
  out.params = meta.flat() + (cfg.learning_rate / (static_cast<double>(m) * cfg.noise)) * step;
  return out;
}

}  // namespace bierl
