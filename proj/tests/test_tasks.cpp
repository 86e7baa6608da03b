#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "bierl/errors.hpp"
#include "bierl/tasks.hpp"

using namespace bierl;

TEST_SUITE("tasks") {

TEST_CASE("sphere and rastrigin closed forms") {
  const Task sphere(FitnessTask{.kind = TaskKind::sphere, .dim = 3});
  CHECK(sphere.evaluate(ParamVector::Zero(3), {}) == 0.0);
  ParamVector x(3);
  x << 1.0, -2.0, 0.5;
  CHECK(sphere.evaluate(x, {}) == -5.25);

  const Task rast(FitnessTask{.kind = TaskKind::rastrigin, .dim = 2});
  CHECK(rast.evaluate(ParamVector::Zero(2), {}) == 0.0);
  CHECK(rast.evaluate(ParamVector::Ones(2), {}) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("initial parameters") {
  const Task sphere(FitnessTask{.kind = TaskKind::sphere, .dim = 4, .init = 2.0});
  CHECK(sphere.initial_params(1) == ParamVector::Constant(4, 2.0));
  const Task nav(FitnessTask{.kind = TaskKind::point_mass_nav});
  CHECK(static_cast<std::size_t>(nav.initial_params(3).size()) == nav.dim());
  CHECK(test::bit_equal(nav.initial_params(3), nav.initial_params(3)));
}

TEST_CASE("point mass with a zero policy never moves") {
  for (auto [horizon, gamma, expected] :
       {std::tuple{10, 0.9, -6.513215599}, std::tuple{200, 1.0, -200.0}}) {
    FitnessTask spec{.kind = TaskKind::point_mass_nav, .horizon = horizon, .gamma = gamma, .seed = 4};
    const Task task(spec);
    const ParamVector zero = ParamVector::Zero(static_cast<Eigen::Index>(task.dim()));
    CHECK(task.evaluate(zero, {}) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(task.episode_length(zero) == horizon);
  }
}

TEST_CASE("point mass policy dimension follows the architecture") {
  const Task task(FitnessTask{.kind = TaskKind::point_mass_nav});
  CHECK(task.dim() == 4u * 64u + 64u + 64u * 64u + 64u + 64u * 2u + 2u);
}

TEST_CASE("cartpole returns are finite and bounded") {
  const Task task(FitnessTask{.kind = TaskKind::cartpole_swingup, .horizon = 100, .seed = 2});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = task.initial_params(s);
    const double r = task.evaluate(p, {});
    CHECK(std::isfinite(r));
    CHECK(r >= 0.0);
    CHECK(r <= 100.0);
    CHECK(task.episode_length(p) <= 100);
  }
  // hanging straight down with no force: reward 0.5 * (1 + cos(pi)) = 0 each step
  const ParamVector zero = ParamVector::Zero(static_cast<Eigen::Index>(task.dim()));
  CHECK(task.evaluate(zero, {}) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("nonstationary sphere schedule") {
  FitnessTask spec{.kind = TaskKind::shifted_sphere_nonstationary, .dim = 20, .seed = 9};
  const Task task(spec);
  const auto o0 = shift_optimum(task, 0);
  CHECK(o0.norm() == doctest::Approx(spec.initial_offset));
  for (int t = 1; t < 50; ++t) CHECK(test::bit_equal(shift_optimum(task, t), o0));
  const auto o1 = shift_optimum(task, 50);
  CHECK((o1 - o0).norm() == doctest::Approx(spec.shift_norm).epsilon(1e-12));
  CHECK(test::bit_equal(shift_optimum(task, 99), o1));

  // fitness at the old optimum drops by exactly |delta|^2
  CHECK(task.evaluate(o0, {49}) == 0.0);
  CHECK(task.evaluate(o0, {50}) == doctest::Approx(-(o1 - o0).squaredNorm()).epsilon(1e-12));
  CHECK(task.evaluate(o0, {50}) == doctest::Approx(-spec.shift_norm * spec.shift_norm).epsilon(1e-12));

  const Task again(spec);
  for (int t : {0, 50, 100, 150, 5000}) CHECK(test::bit_equal(shift_optimum(task, t), shift_optimum(again, t)));
  spec.seed = 10;
  CHECK_FALSE(test::bit_equal(shift_optimum(Task(spec), 0), o0));

  const Task plain(FitnessTask{.kind = TaskKind::sphere});
  CHECK_THROWS_AS(shift_optimum(plain, 0), ConfigError);
}

TEST_CASE("task validation") {
  CHECK_THROWS_AS(Task(FitnessTask{.kind = TaskKind::sphere, .dim = 0}), ConfigError);
  CHECK_THROWS_AS(Task(FitnessTask{.kind = TaskKind::sphere, .horizon = 0}), ConfigError);
  CHECK_THROWS_AS(task_kind_from_string("hopper"), ConfigError);
  for (auto k : {TaskKind::sphere, TaskKind::rastrigin, TaskKind::shifted_sphere_nonstationary,
                 TaskKind::point_mass_nav, TaskKind::cartpole_swingup})
    CHECK(task_kind_from_string(to_string(k)) == k);
}

}
