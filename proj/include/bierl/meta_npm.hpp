#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bierl/es.hpp"
#include "bierl/hyperparams.hpp"
#include "bierl/meta_pm.hpp"

namespace bierl {

/// Squared-exponential kernel on normalized coordinates.
struct GpKernel {
  double length_scale = 0.2;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

/// Zero-mean GP regression model. The kernel matrix is factored with
/// jitter 1e-8, escalated x10 up to 1e-4 until positive definite.
class GaussianProcess {
public:
  GaussianProcess(const std::vector<std::vector<double>>& points, const std::vector<double>& values,
                  GpKernel kernel);

  struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
  };
  Posterior predict(std::span<const double> x) const;
  double jitter() const { return jitter_; }

private:
  double k(std::span<const double> a, std::span<const double> b) const;

  std::vector<std::vector<double>> points_;
  GpKernel kernel_;
  Eigen::MatrixXd chol_l_;
  Eigen::VectorXd weights_;
  double jitter_ = 0.0;
};

/// EI for maximization; always >= 0.
double expected_improvement(double mean, double variance, double best);

struct BoObservation {
  std::vector<double> point;
  double value = 0.0;
  std::int64_t round = 0;
};

struct BoState {
  int dim = 2;
  std::vector<BoObservation> observations;
  GpKernel kernel;
  int candidate_count = 256;
  /// Observations from more than this many rounds ago are dropped at the
  /// start of a round.
  int window_rounds = 3;
  std::int64_t rounds = 0;
  /// Running maximum of every value ever appended.
  double incumbent = -std::numeric_limits<double>::infinity();
};

/// Posterior of a GP fit to the state's observations as stored (no
/// standardization). Throws StateError without observations.
GaussianProcess::Posterior gp_posterior(const BoState& state, std::span<const double> query);

struct BoRoundResult {
  std::vector<double> best_point;
  double best_value = 0.0;
  int evaluations = 0;
  int failures = 0;
  bool ok = false;
  std::string diagnostic;
};

using BoObjective = std::function<double(std::span<const double>)>;

/// `budget` EI-guided evaluations over [0,1]^dim. Candidates are
/// candidate_count uniform points plus the best point in the state; values
/// are standardized before the GP fit. Returns the best point observed in
/// this round. ok = false when every evaluation failed.
BoRoundResult bo_round(BoState& state, const BoObjective& objective, int budget, std::uint64_t seed);

/// Truncated meta fitness of a directly given H.
double construct_meta_fitness(const HyperParams& h, const ParamVector& theta, int repeats,
                              const LookaheadContext& ctx);

struct BoConfig {
  int budget = 5;
  int candidates = 256;
  double length_scale = 0.2;
  double noise_variance = 1e-6;
  int window_rounds = 3;

  void validate() const;
  BoState make_state() const;
};

struct HyperBoResult {
  HyperParams h;
  BoRoundResult round;
};

/// BO round over (sigma, alpha) scored by construct_meta_fitness. The
/// lookahead for evaluation e of the round uses derive(seed, {e}).
HyperBoResult bo_round_hyperparams(BoState& state, const ParamVector& theta,
                                   const HyperRanges& ranges, const EsConfig& es,
                                   const FitnessFn& fitness, std::int64_t iteration, int repeats,
                                   int budget, std::uint64_t seed);

}  // namespace bierl
