#include "bierl/meta_npm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>

#include "bierl/errors.hpp"
#include "bierl/rng.hpp"

namespace bierl {

namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-4;
constexpr double kStdFloor = 1e-8;

}  // namespace

GaussianProcess::GaussianProcess(const std::vector<std::vector<double>>& points,
                                 const std::vector<double>& values, GpKernel kernel)
    : points_(points), kernel_(kernel) {
  if (points.empty()) throw StateError("GP needs at least one observation");
  if (points.size() != values.size()) throw InvariantError("GP points and values differ in count");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      gram(i, j) = gram(j, i) = k(points_[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(j)]);
  gram.diagonal().array() += kernel_.noise_variance;

  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      chol_l_ = llt.matrixL();
      weights_ = llt.solve(Eigen::Map<const Eigen::VectorXd>(values.data(), n));
      jitter_ = jitter;
      return;
    }
  }
  throw NumericalError("GP kernel matrix not positive definite after maximum jitter");
}

double GaussianProcess::k(std::span<const double> a, std::span<const double> b) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return kernel_.signal_variance *
         std::exp(-0.5 * d2 / (kernel_.length_scale * kernel_.length_scale));
}

GaussianProcess::Posterior GaussianProcess::predict(std::span<const double> x) const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  if (x.size() != points_.front().size()) throw InvariantError("GP query has wrong dimension");
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks[i] = k(points_[static_cast<std::size_t>(i)], x);
  const Eigen::VectorXd v = chol_l_.triangularView<Eigen::Lower>().solve(ks);
  return {ks.dot(weights_), std::max(0.0, kernel_.signal_variance - v.squaredNorm())};
}

double expected_improvement(double mean, double variance, double best) {
  const double delta = mean - best;
  if (!(variance > 0.0)) return std::max(delta, 0.0);
  const double s = std::sqrt(variance);
  const double z = delta / s;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, delta * cdf + s * pdf);
}

GaussianProcess::Posterior gp_posterior(const BoState& state, std::span<const double> query) {
  if (state.observations.empty()) throw StateError("GP posterior needs at least one observation");
  std::vector<std::vector<double>> points;
  std::vector<double> values;
  for (const auto& o : state.observations) {
    points.push_back(o.point);
    values.push_back(o.value);
  }
  return GaussianProcess(points, values, state.kernel).predict(query);
}

BoRoundResult bo_round(BoState& state, const BoObjective& objective, int budget, std::uint64_t seed) {
  if (budget < 1) throw ConfigError("BO budget must be >= 1");
  if (state.dim < 1) throw ConfigError("BO dimension must be >= 1");
  const std::int64_t round = state.rounds;
  std::erase_if(state.observations,
                [&](const BoObservation& o) { return round - o.round > state.window_rounds; });

  auto eng = rng::engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_point = [&] {
    std::vector<double> p(static_cast<std::size_t>(state.dim));
    for (double& v : p) v = unit(eng);
    return p;
  };

  BoRoundResult out;
  out.best_value = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < budget; ++b) {
    std::vector<double> next;
    if (state.observations.empty()) {
      next = random_point();
    } else {
      std::vector<std::vector<double>> points;
      std::vector<double> values;
      for (const auto& o : state.observations) {
        points.push_back(o.point);
        values.push_back(o.value);
      }
      const double n = static_cast<double>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= n;
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      const double sd = std::max(std::sqrt(var / n), kStdFloor);
      std::size_t best_index = 0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = (values[i] - mean) / sd;
        if (values[i] > values[best_index]) best_index = i;
      }
      const GaussianProcess gp(points, values, state.kernel);
      const double best = values[best_index];

      next = points[best_index];
      double best_ei = -1.0;
      for (int c = 0; c <= state.candidate_count; ++c) {
        std::vector<double> cand = c == 0 ? points[best_index] : random_point();
        const auto post = gp.predict(cand);
        const double ei = expected_improvement(post.mean, post.variance, best);
        if (ei > best_ei) {
          best_ei = ei;
          next = std::move(cand);
        }
      }
    }

    double value = 0.0;
    try {
      value = objective(next);
      if (!std::isfinite(value)) throw EvaluationError("non-finite BO objective", b);
    } catch (const std::exception& e) {
      ++out.failures;
      out.diagnostic = e.what();
      continue;
    }
    ++out.evaluations;
    state.observations.push_back({next, value, round});
    state.incumbent = std::max(state.incumbent, value);
    if (value > out.best_value) {
      out.best_value = value;
      out.best_point = next;
    }
  }
  state.rounds = round + 1;
  out.ok = out.evaluations > 0;
  if (!out.ok) out.diagnostic = "every BO evaluation failed: " + out.diagnostic;
  return out;
}

double construct_meta_fitness(const HyperParams& h, const ParamVector& theta, int repeats,
                              const LookaheadContext& ctx) {
  return one_step_return(h, theta, repeats, ctx);
}

void BoConfig::validate() const {
  if (budget < 1) throw ConfigError("npm budget must be >= 1");
  if (candidates < 1) throw ConfigError("npm candidates must be >= 1");
  if (!(length_scale > 0.0)) throw ConfigError("npm length_scale must be > 0");
  if (!(noise_variance >= 0.0)) throw ConfigError("npm noise_variance must be >= 0");
  if (window_rounds < 0) throw ConfigError("npm window_rounds must be >= 0");
}

BoState BoConfig::make_state() const {
  BoState s;
  s.dim = static_cast<int>(HyperRanges::kCount);
  s.kernel = {length_scale, 1.0, noise_variance};
  s.candidate_count = candidates;
  s.window_rounds = window_rounds;
  return s;
}

HyperBoResult bo_round_hyperparams(BoState& state, const ParamVector& theta,
                                   const HyperRanges& ranges, const EsConfig& es,
                                   const FitnessFn& fitness, std::int64_t iteration, int repeats,
                                   int budget, std::uint64_t seed) {
  ranges.validate();
  std::uint64_t counter = 0;
  const BoObjective objective = [&](std::span<const double> u) {
    const auto h = HyperParams::from_unit({u[0], u[1]}, ranges);
    LookaheadContext ctx{&es, &fitness, iteration, rng::derive(seed, {rng::kLookahead, counter++})};
    return construct_meta_fitness(h, theta, repeats, ctx);
  };
  HyperBoResult out;
  out.round = bo_round(state, objective, budget, rng::derive(seed, {rng::kBo}));
  if (out.round.ok)
    out.h = HyperParams::from_unit({out.round.best_point[0], out.round.best_point[1]}, ranges);
  return out;
}

}  // namespace bierl
