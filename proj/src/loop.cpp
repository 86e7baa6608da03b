#include "bierl/loop.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "bierl/errors.hpp"
#include "bierl/rng.hpp"

namespace bierl {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::baseline_fixed:
      return "baseline_fixed";
    case Mode::pm:
      return "pm";
    case Mode::npm:
      return "npm";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  for (auto m : {Mode::baseline_fixed, Mode::pm, Mode::npm})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown mode '" + name + "'");
}

void LoopConfig::validate() const {
  es.validate();
  if (mode != Mode::baseline_fixed) {
    meta.validate();
    ranges.validate();
    if (!initial.within(ranges))
      throw ConfigError("initial hyperparameters lie outside the configured ranges");
  }
  if (mode == Mode::npm) bo.validate();
  if (mode == Mode::pm) {
    encoder_spec().validate();
    generator_spec().validate();
  }
}

nn::LstmSpec LoopConfig::encoder_spec() const {
  return {es.population, lstm_hidden, meta.interval};
}

nn::MlpSpec LoopConfig::generator_spec() const {
  return nn::generator_spec(lstm_hidden, generator_hidden);
}

Runner::Runner(LoopConfig cfg, const Task& task)
    : cfg_(std::move(cfg)), task_(&task), fitness_(task.fitness()) {
  cfg_.validate();
}

RunState Runner::initial_state(std::optional<nn::MetaModel> warm_meta) const {
  RunState s;
  s.theta = task_->initial_params(cfg_.seed);
  s.h = cfg_.mode == Mode::baseline_fixed ? HyperParams{cfg_.es.noise, cfg_.es.learning_rate}
                                          : cfg_.initial;
  if (cfg_.mode == Mode::pm) {
    s.buffer = PopulationReplayBuffer(cfg_.meta.interval, cfg_.es.population);
    if (warm_meta) {
      if (warm_meta->encoder_hash() != nn::spec_hash(cfg_.encoder_spec().describe()) ||
          warm_meta->generator_hash() != nn::spec_hash(cfg_.generator_spec().describe()))
        throw FormatError("warm-start meta model is incompatible with the configured architecture");
      s.meta = std::move(warm_meta);
    } else {
      s.meta = nn::MetaModel::initialized(cfg_.encoder_spec(), cfg_.generator_spec(),
                                          rng::derive(cfg_.seed, {rng::kMetaInit}));
    }
  }
  if (cfg_.mode == Mode::npm) s.bo = cfg_.bo.make_state();
  return s;
}

RunRecord Runner::step(RunState& state) const {
  const auto started = std::chrono::steady_clock::now();
  const std::int64_t t = state.iteration;
  if (cfg_.mode != Mode::baseline_fixed && !state.h.within(cfg_.ranges))
    throw StateError("hyperparameters left their configured ranges at iteration " + std::to_string(t));

  const auto noise_seed = rng::derive(cfg_.seed, {rng::kInnerNoise, static_cast<std::uint64_t>(t)});
  auto result = es_step(state.theta, cfg_.es, state.h, fitness_, {noise_seed, t});

  RunRecord rec;
  rec.iteration = t;
  rec.ret = result.center_return;
  const auto& values = result.fitness.values;
  rec.pop_mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  rec.pop_max = *std::max_element(values.begin(), values.end());
  rec.sigma = state.h.sigma;
  rec.alpha = state.h.alpha;
  rec.seed = cfg_.seed;

  state.theta = std::move(result.theta);
  state.inner_evals += static_cast<std::uint64_t>(cfg_.es.population);
  if (cfg_.mode == Mode::pm) state.buffer.push(result.fitness);
  state.iteration = t + 1;

  if (cfg_.mode != Mode::baseline_fixed && (t + 1) % cfg_.meta.interval == 0) meta_step(state, t);
  if (cfg_.mode == Mode::pm) state.h = propose_hyperparams(*state.meta, state.buffer, cfg_.ranges);

  rec.inner_evals = state.inner_evals;
  rec.lookahead_evals = state.lookahead_evals;
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

void Runner::meta_step(RunState& state, std::int64_t t) const {
  const auto per_lookahead = static_cast<std::uint64_t>(cfg_.meta.repeats) *
                             static_cast<std::uint64_t>(cfg_.es.population + 1);
  if (cfg_.mode == Mode::pm) {
    const auto u = state.meta_updates;
    const MetaUpdateSeeds seeds{rng::derive(cfg_.seed, {rng::kMetaNoise, u}),
                                rng::derive(cfg_.seed, {rng::kLookahead, u})};
    auto update = meta_es_update(*state.meta, state.theta, state.buffer, cfg_.meta, cfg_.ranges,
                                 cfg_.es, fitness_, t, seeds);
    state.lookahead_evals += static_cast<std::uint64_t>(cfg_.meta.population) * per_lookahead;
    if (update.ok)
      state.meta->flat() = std::move(update.params);
    else
      state.diagnostics.push_back("iteration " + std::to_string(t) + ": " + update.diagnostic);
  } else {
    const auto r = static_cast<std::uint64_t>(state.bo.rounds);
    auto found = bo_round_hyperparams(state.bo, state.theta, cfg_.ranges, cfg_.es, fitness_, t,
                                      cfg_.meta.repeats, cfg_.bo.budget,
                                      rng::derive(cfg_.seed, {rng::kBo, r}));
    state.lookahead_evals +=
        static_cast<std::uint64_t>(found.round.evaluations + found.round.failures) * per_lookahead;
    if (found.round.ok)
      state.h = found.h;
    else
      state.diagnostics.push_back("iteration " + std::to_string(t) + ": " + found.round.diagnostic);
  }
  ++state.meta_updates;
}

void Runner::run(RunState& state, std::int64_t total_iterations, const RecordSink& sink) const {
  while (state.iteration < total_iterations) {
    const RunRecord rec = step(state);
    if (sink) sink(rec, state);
  }
}

std::uint64_t Runner::expected_inner_evals(std::int64_t iterations) const {
  return static_cast<std::uint64_t>(iterations) * static_cast<std::uint64_t>(cfg_.es.population);
}

std::uint64_t Runner::expected_lookahead_evals(std::int64_t iterations) const {
  if (cfg_.mode == Mode::baseline_fixed) return 0;
  const auto updates = static_cast<std::uint64_t>(iterations / cfg_.meta.interval);
  const auto per_update = static_cast<std::uint64_t>(
      cfg_.mode == Mode::pm ? cfg_.meta.population : cfg_.bo.budget);
  return updates * per_update * static_cast<std::uint64_t>(cfg_.meta.repeats) *
         static_cast<std::uint64_t>(cfg_.es.population + 1);
}

namespace {

LoopResult drive(const Runner& runner, RunState state, std::int64_t total) {
  LoopResult out;
  runner.run(state, total, [&](const RunRecord& r, const RunState&) { out.records.push_back(r); });
  out.theta = std::move(state.theta);
  out.meta = std::move(state.meta);
  return out;
}

}  // namespace

LoopResult integrated_loop(const ParamVector& theta0, const nn::MetaModel& meta0,
                           const LoopConfig& cfg, const Task& task, std::int64_t total_iterations) {
  LoopConfig c = cfg;
  c.mode = Mode::pm;
  Runner runner(c, task);
  RunState s = runner.initial_state(meta0);
  s.theta = theta0;
  return drive(runner, std::move(s), total_iterations);
}

LoopResult npm_integrated_loop(const ParamVector& theta0, const LoopConfig& cfg, const Task& task,
                               std::int64_t total_iterations) {
  LoopConfig c = cfg;
  c.mode = Mode::npm;
  Runner runner(c, task);
  RunState s = runner.initial_state();
  s.theta = theta0;
  return drive(runner, std::move(s), total_iterations);
}

LoopResult baseline_loop(const ParamVector& theta0, const LoopConfig& cfg, const Task& task,
                         std::int64_t total_iterations) {
  LoopConfig c = cfg;
  c.mode = Mode::baseline_fixed;
  Runner runner(c, task);
  RunState s = runner.initial_state();
  s.theta = theta0;
  return drive(runner, std::move(s), total_iterations);
}

}  // namespace bierl
