#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bierl/es.hpp"
#include "bierl/nn.hpp"

namespace bierl {

enum class TaskKind { sphere, rastrigin, shifted_sphere_nonstationary, point_mass_nav, cartpole_swingup };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

/// Description of a fitness landscape. All tasks are maximization problems.
struct FitnessTask {
  TaskKind kind = TaskKind::sphere;
  /// Parameter count for the analytic tasks; ignored by control tasks,
  /// whose dimension is the policy parameter count.
  int dim = 10;
  int horizon = 200;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  /// Analytic tasks start from theta = (init, ..., init).
  double init = 2.0;
  /// Nonstationary sphere: the optimum jumps by a vector of norm
  /// shift_norm every shift_every iterations, starting from a seeded point
  /// of norm initial_offset.
  int shift_every = 50;
  double shift_norm = 10.0;
  double initial_offset = 10.0;
  std::vector<int> policy_hidden{64, 64};

  void validate() const;
};

/// Analytic point-mass constants: 2-D double integrator driven toward a goal.
struct PointMassModel {
  static constexpr double kDt = 0.1;
  static constexpr double kMaxAccel = 1.0;
  static constexpr double kGoalDistance = 1.0;
  static constexpr int kObsDim = 4;
  static constexpr int kActDim = 2;
};

/// Cart-pole with continuous force, pole starting straight down.
struct CartPoleModel {
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kMaxForce = 10.0;
  static constexpr double kDt = 0.05;
  static constexpr int kSubsteps = 5;
  static constexpr double kTrackLimit = 2.4;
  static constexpr int kObsDim = 5;
  static constexpr int kActDim = 1;
};

/// A constructed task instance. Evaluation is a pure function of
/// (params, iteration); eval_seed is accepted but the bundled tasks are
/// deterministic.
class Task {
public:
  explicit Task(FitnessTask spec);

  const FitnessTask& spec() const { return spec_; }
  std::size_t dim() const;

  double evaluate(const ParamVector& params, const EvalContext& ctx) const;
  FitnessFn fitness() const;

  ParamVector initial_params(std::uint64_t seed) const;

  /// Location of the sphere optimum at an iteration (zero for the
  /// stationary sphere, the shifted target for the nonstationary one).
  Eigen::VectorXd optimum(std::int64_t iteration) const;

  /// Policy network for the control tasks.
  std::optional<nn::MlpSpec> policy() const;

  /// Number of episode steps actually simulated (early termination
  /// included). Control tasks only.
  int episode_length(const ParamVector& params) const;

private:
  Eigen::VectorXd shift(std::int64_t index) const;
  double rollout(const ParamVector& params, int* steps) const;
  double point_mass(const ParamVector& params, int* steps) const;
  double cartpole(const ParamVector& params, int* steps) const;

  FitnessTask spec_;
  Eigen::VectorXd origin_;
  std::vector<Eigen::VectorXd> shifts_;
  Eigen::Vector2d goal_{1.0, 0.0};
};

double evaluate(const Task& task, const ParamVector& params, const EvalContext& ctx);

/// Nonstationary sphere target at `iteration`. Throws ConfigError for other
/// task kinds.
Eigen::VectorXd shift_optimum(const Task& task, std::int64_t iteration);

}  // namespace bierl
