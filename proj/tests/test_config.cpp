#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"

#include "bierl/config.hpp"
#include "bierl/errors.hpp"

using namespace bierl;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("profile defaults") {
  const auto q = profile_defaults(Profile::quickstart);
  CHECK(q.loop.es.population == 50);
  CHECK(q.loop.meta.population == 20);
  CHECK(q.loop.meta.repeats == 1);
  CHECK(q.loop.meta.interval == 10);
  CHECK(q.loop.lstm_hidden == 64);
  CHECK(q.total_iterations == 200);
  CHECK(q.task.horizon == 200);
  CHECK(q.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});

  const auto p = profile_defaults(Profile::paper_scale);
  CHECK(p.loop.es.population == 200);
  CHECK(p.loop.es.learning_rate == 0.02);
  CHECK(p.loop.es.noise == 0.05);
  CHECK(p.loop.meta.population == 200);
  CHECK(p.loop.meta.learning_rate == 0.006);
  CHECK(p.loop.meta.noise == 0.05);
  CHECK(p.loop.meta.interval == 10);
  CHECK(p.loop.lstm_hidden == 1024);
  CHECK(p.loop.generator_hidden == 32);
  CHECK(p.task.horizon == 1000);
  CHECK(p.task.gamma == 1.0);
  CHECK(p.warm.meta_updates == 10);
  CHECK_NOTHROW(q.validate());
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("parsing sections, lists and comments") {
  const auto c = parse_config(R"(
# experiment
[run]
profile = "paper_scale"
modes = [pm, npm]     # trailing comment
seeds = [7, 8]
total_iterations = 30
output_dir = "out dir"

[task]
kind = "shifted_sphere_nonstationary"
dim = 20
shift_norm = 4.5

[es]
population = 24
shaping = raw
antithetic = true

[meta]
interval = 5
common_lookahead_noise = false

[ranges]
alpha = [0.01, 0.03]
)");
  CHECK(c.profile == Profile::paper_scale);
  CHECK(c.loop.meta.population == 200);
  CHECK(c.modes == std::vector<Mode>{Mode::pm, Mode::npm});
  CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});
  CHECK(c.total_iterations == 30);
  CHECK(c.output_dir == "out dir");
  CHECK(c.task.kind == TaskKind::shifted_sphere_nonstationary);
  CHECK(c.task.dim == 20);
  CHECK(c.task.shift_norm == 4.5);
  CHECK(c.loop.es.population == 24);
  CHECK(c.loop.es.shaping == Shaping::raw);
  CHECK(c.loop.es.antithetic);
  CHECK(c.loop.meta.interval == 5);
  CHECK_FALSE(c.loop.meta.common_lookahead_noise);
  CHECK(c.loop.ranges.alpha.lo == 0.01);
  CHECK(c.loop.ranges.alpha.hi == 0.03);
}

TEST_CASE("unknown keys name the line and key") {
  const auto msg = error_of("[run]\nseeds = [1]\n\n[es]\npopulaton = 4\n");
  CHECK(msg.find("line 5") != std::string::npos);
  CHECK(msg.find("es.populaton") != std::string::npos);
  CHECK(error_of("[nope]\nx = 1\n").find("nope.x") != std::string::npos);
}

TEST_CASE("malformed values name the line and key") {
  const auto msg = error_of("[es]\n\npopulation = many\n");
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("es.population") != std::string::npos);
  CHECK_FALSE(error_of("[run]\nmodes = [pm, sweep]\n").empty());
  CHECK_FALSE(error_of("[es]\nantithetic = yes\n").empty());
  CHECK_FALSE(error_of("[ranges]\nsigma = [0.1]\n").empty());
  CHECK_FALSE(error_of("population = 4\n").empty());
  CHECK_FALSE(error_of("[es\n").empty());
  CHECK_FALSE(error_of("[es]\npopulation\n").empty());
}

TEST_CASE("overrides beat the file, the file beats the defaults") {
  auto c = parse_config("[es]\npopulation = 30\nnoise = 0.07\n");
  CHECK(c.loop.es.population == 30);
  CHECK(c.loop.es.learning_rate == 0.02);
  apply_override(c, "es.population=40");
  apply_override(c, " meta.repeats = 2 ");
  CHECK(c.loop.es.population == 40);
  CHECK(c.loop.es.noise == 0.07);
  CHECK(c.loop.meta.repeats == 2);
  CHECK_THROWS_AS(apply_override(c, "es.bogus=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "es.population"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "run.profile=paper_scale"), ConfigError);
  const auto forced = parse_config("[run]\nprofile = paper_scale\n", Profile::quickstart);
  CHECK(forced.loop.es.population == 50);
}

TEST_CASE("validation") {
  auto c = profile_defaults(Profile::quickstart);
  c.modes.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = profile_defaults(Profile::quickstart);
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = profile_defaults(Profile::quickstart);
  c.sweep = SweepConfig{"n", {}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.sweep = SweepConfig{"gamma", {1.0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = profile_defaults(Profile::quickstart);
  apply_override(c, "es.population=1");
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("per-run task seed") {
  auto c = profile_defaults(Profile::quickstart);
  CHECK(c.task_for(3).seed == 3);
  apply_override(c, "task.seed=11");
  CHECK(c.task_for(3).seed == 11);
  CHECK(c.loop_for(Mode::npm, 4).seed == 4);
  CHECK(c.loop_for(Mode::npm, 4).mode == Mode::npm);
}

TEST_CASE("every key is reachable by override") {
  const auto keys = config_keys();
  CHECK(std::find(keys.begin(), keys.end(), "meta.lstm_hidden") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "sweep.values") != keys.end());
}

TEST_CASE("loop configuration json round trip") {
  auto c = profile_defaults(Profile::paper_scale).loop_for(Mode::npm, 9);
  c.es.antithetic = true;
  c.ranges.sigma = {0.02, 0.2};
  const auto back = loop_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  FitnessTask t{.kind = TaskKind::cartpole_swingup, .horizon = 77, .gamma = 0.99, .seed = 5};
  CHECK(to_json(task_from_json(to_json(t))) == to_json(t));
}

}
