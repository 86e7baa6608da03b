#include "bierl/tasks.hpp"

#include <cmath>
#include <numbers>

#include "bierl/errors.hpp"
#include "bierl/rng.hpp"

namespace bierl {

namespace {

constexpr int kCachedShifts = 64;

Eigen::VectorXd random_direction(std::uint64_t seed, int dim, double norm) {
  auto eng = rng::engine(seed);
  Eigen::VectorXd v(dim);
  rng::fill_normal(eng, {v.data(), static_cast<std::size_t>(dim)});
  return v * (norm / v.norm());
}

bool is_control(TaskKind k) {
  return k == TaskKind::point_mass_nav || k == TaskKind::cartpole_swingup;
}

}  // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::sphere:
      return "sphere";
    case TaskKind::rastrigin:
      return "rastrigin";
    case TaskKind::shifted_sphere_nonstationary:
      return "shifted_sphere_nonstationary";
    case TaskKind::point_mass_nav:
      return "point_mass_nav";
    case TaskKind::cartpole_swingup:
      return "cartpole_swingup";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& name) {
  for (auto k : {TaskKind::sphere, TaskKind::rastrigin, TaskKind::shifted_sphere_nonstationary,
                 TaskKind::point_mass_nav, TaskKind::cartpole_swingup})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown task kind '" + name + "'");
}

void FitnessTask::validate() const {
  if (!is_control(kind) && dim < 1) throw ConfigError("task dim must be >= 1");
  if (horizon < 1) throw ConfigError("task horizon must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("task gamma must be in (0, 1]");
  if (kind == TaskKind::shifted_sphere_nonstationary) {
    if (shift_every < 1) throw ConfigError("shift_every must be >= 1");
    if (!(shift_norm >= 0.0)) throw ConfigError("shift_norm must be >= 0");
  }
  for (int h : policy_hidden)
    if (h < 1) throw ConfigError("policy hidden widths must be positive");
}

Task::Task(FitnessTask spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.kind == TaskKind::shifted_sphere_nonstationary) {
    origin_ = random_direction(rng::derive(spec_.seed, {rng::kTask, 0}), spec_.dim,
                               spec_.initial_offset);
    shifts_.reserve(kCachedShifts);
    for (int s = 1; s <= kCachedShifts; ++s) shifts_.push_back(shift(s));
  } else if (!is_control(spec_.kind)) {
    origin_ = Eigen::VectorXd::Zero(spec_.dim);
  }
  if (spec_.kind == TaskKind::point_mass_nav) {
    auto eng = rng::engine(rng::derive(spec_.seed, {rng::kTask, 1}));
    const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(eng);
    goal_ = PointMassModel::kGoalDistance * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
}

std::optional<nn::MlpSpec> Task::policy() const {
  switch (spec_.kind) {
    case TaskKind::point_mass_nav:
      return nn::MlpSpec{PointMassModel::kObsDim, spec_.policy_hidden, PointMassModel::kActDim,
                         nn::Activation::tanh, nn::Activation::tanh};
    case TaskKind::cartpole_swingup:
      return nn::MlpSpec{CartPoleModel::kObsDim, spec_.policy_hidden, CartPoleModel::kActDim,
                         nn::Activation::tanh, nn::Activation::tanh};
    default:
      return std::nullopt;
  }
}

std::size_t Task::dim() const {
  if (auto p = policy()) return p->param_count();
  return static_cast<std::size_t>(spec_.dim);
}

Eigen::VectorXd Task::shift(std::int64_t index) const {
  return random_direction(rng::derive(spec_.seed, {rng::kTask, 2, static_cast<std::uint64_t>(index)}),
                          spec_.dim, spec_.shift_norm);
}

Eigen::VectorXd Task::optimum(std::int64_t iteration) const {
  if (is_control(spec_.kind)) throw ConfigError("control tasks have no analytic optimum");
  if (spec_.kind != TaskKind::shifted_sphere_nonstationary) return origin_;
  Eigen::VectorXd c = origin_;
  const std::int64_t count = iteration < 0 ? 0 : iteration / spec_.shift_every;
  for (std::int64_t s = 1; s <= count; ++s)
    c += s <= kCachedShifts ? shifts_[static_cast<std::size_t>(s - 1)] : shift(s);
  return c;
}

double Task::evaluate(const ParamVector& params, const EvalContext& ctx) const {
  if (static_cast<std::size_t>(params.size()) != dim())
    throw ConfigError("task " + to_string(spec_.kind) + " expects " + std::to_string(dim()) +
                      " parameters, got " + std::to_string(params.size()));
  switch (spec_.kind) {
    case TaskKind::sphere:
      return -params.squaredNorm();
    case TaskKind::shifted_sphere_nonstationary:
      return -(params - optimum(ctx.iteration)).squaredNorm();
    case TaskKind::rastrigin: {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double x = params[i];
        sum += x * x - 10.0 * std::cos(2.0 * std::numbers::pi * x) + 10.0;
      }
      return -sum;
    }
    case TaskKind::point_mass_nav:
    case TaskKind::cartpole_swingup:
      return rollout(params, nullptr);
  }
  return 0.0;
}

FitnessFn Task::fitness() const {
  return [this](const ParamVector& p, const EvalContext& ctx) { return evaluate(p, ctx); };
}

ParamVector Task::initial_params(std::uint64_t seed) const {
  if (auto p = policy()) {
    auto eng = rng::engine(rng::derive(seed, {rng::kPolicyInit}));
    return nn::init_mlp(*p, eng);
  }
  if (spec_.kind == TaskKind::shifted_sphere_nonstationary) return ParamVector::Zero(spec_.dim);
  return ParamVector::Constant(spec_.dim, spec_.init);
}

int Task::episode_length(const ParamVector& params) const {
  if (!is_control(spec_.kind)) throw ConfigError("episode_length needs a control task");
  int steps = 0;
  rollout(params, &steps);
  return steps;
}

double Task::rollout(const ParamVector& params, int* steps) const {
  return spec_.kind == TaskKind::point_mass_nav ? point_mass(params, steps)
                                                : cartpole(params, steps);
}

double Task::point_mass(const ParamVector& params, int* steps) const {
  const auto spec = *policy();
  const std::span<const double> weights(params.data(), static_cast<std::size_t>(params.size()));
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
  double ret = 0.0;
  double discount = 1.0;
  int t = 0;
  for (; t < spec_.horizon; ++t) {
    const Eigen::Vector4d obs(pos.x() - goal_.x(), pos.y() - goal_.y(), vel.x(), vel.y());
    const Eigen::VectorXd act = nn::mlp_forward(spec, weights, {obs.data(), 4});
    vel += PointMassModel::kDt * PointMassModel::kMaxAccel * act;
    pos += PointMassModel::kDt * vel;
    ret += discount * -(pos - goal_).norm();
    discount *= spec_.gamma;
  }
  if (steps) *steps = t;
  return ret;
}

double Task::cartpole(const ParamVector& params, int* steps) const {
  using M = CartPoleModel;
  const auto spec = *policy();
  const std::span<const double> weights(params.data(), static_cast<std::size_t>(params.size()));
  double x = 0.0, x_dot = 0.0, angle = std::numbers::pi, angle_dot = 0.0;
  constexpr double total_mass = M::kCartMass + M::kPoleMass;
  constexpr double h = M::kDt / M::kSubsteps;
  double ret = 0.0;
  double discount = 1.0;
  int t = 0;
  while (t < spec_.horizon) {
    const double obs[5] = {x, x_dot, std::cos(angle), std::sin(angle), angle_dot};
    const double force = M::kMaxForce * nn::mlp_forward(spec, weights, obs)[0];
    for (int s = 0; s < M::kSubsteps; ++s) {
      const double sin_a = std::sin(angle), cos_a = std::cos(angle);
      const double temp =
          (force + M::kPoleMass * M::kHalfLength * angle_dot * angle_dot * sin_a) / total_mass;
      const double angle_acc =
          (M::kGravity * sin_a - cos_a * temp) /
          (M::kHalfLength * (4.0 / 3.0 - M::kPoleMass * cos_a * cos_a / total_mass));
      const double x_acc = temp - M::kPoleMass * M::kHalfLength * angle_acc * cos_a / total_mass;
      x_dot += h * x_acc;
      x += h * x_dot;
      angle_dot += h * angle_acc;
      angle += h * angle_dot;
    }
    ++t;
    ret += discount * 0.5 * (1.0 + std::cos(angle));
    discount *= spec_.gamma;
    if (std::abs(x) > M::kTrackLimit) break;
  }
  if (steps) *steps = t;
  return ret;
}

double evaluate(const Task& task, const ParamVector& params, const EvalContext& ctx) {
  return task.evaluate(params, ctx);
}

Eigen::VectorXd shift_optimum(const Task& task, std::int64_t iteration) {
  if (task.spec().kind != TaskKind::shifted_sphere_nonstationary)
    throw ConfigError("shift_optimum needs the nonstationary sphere task");
  return task.optimum(iteration);
}

}  // namespace bierl
