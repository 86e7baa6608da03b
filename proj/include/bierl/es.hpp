#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "bierl/hyperparams.hpp"

namespace bierl {

/// Flat parameter vector of a model trained by ES.
using ParamVector = Eigen::VectorXd;

enum class Shaping { raw, centered_rank };

/// Fitness of every perturbed individual of one inner iteration.
struct PopulationFitness {
  std::vector<double> values;
  std::int64_t iteration = 0;
};

/// Inner-level ES settings. sigma and alpha here are the static defaults;
/// the adaptive loops override them through HyperParams.
struct EsConfig {
  int population = 200;
  double learning_rate = 0.02;
  double noise = 0.05;
  double gamma = 1.0;
  Shaping shaping = Shaping::centered_rank;
  bool antithetic = false;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

/// What a fitness evaluation may depend on besides the parameters.
struct EvalContext {
  std::int64_t iteration = 0;
  std::uint64_t eval_seed = 0;
};

using FitnessFn = std::function<double(const ParamVector&, const EvalContext&)>;

struct Perturbation {
  ParamVector noise;
  ParamVector params;
};

/// Draws n perturbations theta + sigma * eps_i, with eps_i taken in index
/// order from one stream derived from noise_seed. When antithetic, odd i
/// mirror eps_{i-1}. sigma == 0 is rejected unless allow_zero_sigma.
std::vector<Perturbation> sample_population(std::uint64_t noise_seed, const ParamVector& theta,
                                            double sigma, int n, bool antithetic = false,
                                            bool allow_zero_sigma = false);

/// Centered ranks in [-0.5, 0.5]; tied values share their average rank.
std::vector<double> centered_ranks(const std::vector<double>& values);

std::vector<double> shape_fitness(const std::vector<double>& values, Shaping shaping);

/// (1 / (n sigma)) * sum_i s(f_i) eps_i, accumulated in index order.
ParamVector estimate_search_gradient(const std::vector<ParamVector>& noises,
                                     const std::vector<double>& fitnesses, double sigma,
                                     Shaping shaping);

struct StepContext {
  std::uint64_t noise_seed = 0;
  std::int64_t iteration = 0;
  /// Skip the f(theta) evaluation; lookaheads do not need it.
  bool evaluate_center = true;
  bool allow_zero_sigma = false;
};

struct StepResult {
  ParamVector theta;
  PopulationFitness fitness;
  double center_return = 0.0;
};

/// One plain SGD ES update: theta + alpha * g. Evaluations run on
/// cfg.workers threads; the reduction is always in index order.
StepResult es_step(const ParamVector& theta, const EsConfig& cfg, const HyperParams& h,
                   const FitnessFn& fitness, const StepContext& ctx);

}  // namespace bierl
