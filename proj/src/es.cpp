#include "bierl/es.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bierl/errors.hpp"
#include "bierl/parallel.hpp"
#include "bierl/rng.hpp"

namespace bierl {

void EsConfig::validate() const {
  if (population < 2) throw ConfigError("es population must be >= 2");
  if (!(noise > 0.0)) throw ConfigError("es noise must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("es learning_rate must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (antithetic && population % 2 != 0)
    throw ConfigError("antithetic sampling needs an even population");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::vector<Perturbation> sample_population(std::uint64_t noise_seed, const ParamVector& theta,
                                            double sigma, int n, bool antithetic,
                                            bool allow_zero_sigma) {
  if (!(sigma > 0.0) && !(allow_zero_sigma && sigma == 0.0))
    throw ConfigError("sigma must be > 0");
  if (n < 2) throw ConfigError("population must be >= 2");
  if (antithetic && n % 2 != 0) throw ConfigError("antithetic sampling needs an even population");

  std::vector<Perturbation> out(static_cast<std::size_t>(n));
  auto eng = rng::engine(rng::derive(noise_seed, {rng::kInnerNoise}));
  for (int i = 0; i < n; ++i) {
    auto& p = out[static_cast<std::size_t>(i)];
    if (antithetic && i % 2 == 1) {
      p.noise = -out[static_cast<std::size_t>(i - 1)].noise;
    } else {
      p.noise.resize(theta.size());
      rng::fill_normal(eng, {p.noise.data(), static_cast<std::size_t>(p.noise.size())});
    }
    p.params = theta + sigma * p.noise;
  }
  return out;
}

std::vector<double> centered_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double denom = static_cast<double>(n - 1);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // tied block [start, end) gets the average rank
    const double rank = 0.5 * static_cast<double>(start + end - 1);
    for (std::size_t k = start; k < end; ++k) out[order[k]] = rank / denom - 0.5;
    start = end;
  }
  return out;
}

std::vector<double> shape_fitness(const std::vector<double>& values, Shaping shaping) {
  return shaping == Shaping::raw ? values : centered_ranks(values);
}

ParamVector estimate_search_gradient(const std::vector<ParamVector>& noises,
                                     const std::vector<double>& fitnesses, double sigma,
                                     Shaping shaping) {
  if (noises.size() != fitnesses.size())
    throw InvariantError("noise count " + std::to_string(noises.size()) +
                         " != fitness count " + std::to_string(fitnesses.size()));
  if (noises.empty()) throw InvariantError("empty population");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  const auto dim = noises.front().size();
  const auto shaped = shape_fitness(fitnesses, shaping);
  ParamVector g = ParamVector::Zero(dim);
  for (std::size_t i = 0; i < noises.size(); ++i) {
    if (noises[i].size() != dim) throw InvariantError("noise vectors differ in dimension");
    g += shaped[i] * noises[i];
  }
  return g / (static_cast<double>(noises.size()) * sigma);
}

StepResult es_step(const ParamVector& theta, const EsConfig& cfg, const HyperParams& h,
                   const FitnessFn& fitness, const StepContext& ctx) {
  if (!(h.alpha >= 0.0) || !std::isfinite(h.alpha)) throw ConfigError("alpha must be >= 0");
  auto population = sample_population(ctx.noise_seed, theta, h.sigma, cfg.population,
                                      cfg.antithetic, ctx.allow_zero_sigma);
  const auto n = population.size();

  std::vector<double> values(n);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    values[i] = fitness(population[i].params,
                        {ctx.iteration, rng::derive(ctx.noise_seed, {rng::kEval, i})});
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i]))
      throw EvaluationError("non-finite fitness for individual " + std::to_string(i),
                            static_cast<std::ptrdiff_t>(i));
  }

  StepResult out;
  if (ctx.evaluate_center) {
    out.center_return = fitness(theta, {ctx.iteration, rng::derive(ctx.noise_seed, {rng::kEval, n})});
    if (!std::isfinite(out.center_return))
      throw EvaluationError("non-finite fitness for unperturbed parameters", -1);
  }

  if (h.sigma == 0.0) {
    // zero-noise test mode: every individual equals theta, no direction
    out.theta = theta;
  } else {
    std::vector<ParamVector> noises;
    noises.reserve(n);
    for (auto& p : population) noises.push_back(std::move(p.noise));
    out.theta = theta + h.alpha * estimate_search_gradient(noises, values, h.sigma, cfg.shaping);
  }
  if (!out.theta.allFinite()) throw NumericalError("ES update produced non-finite parameters");
  out.fitness.values = std::move(values);
  out.fitness.iteration = ctx.iteration;
  return out;
}

}  // namespace bierl
