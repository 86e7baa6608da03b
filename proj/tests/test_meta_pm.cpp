#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "bierl/errors.hpp"
#include "bierl/meta_pm.hpp"
#include "bierl/rng.hpp"

using namespace bierl;

namespace {

PopulationReplayBuffer filled(int k, int n, int rows, double scale = 1.0) {
  PopulationReplayBuffer b(k, n);
  for (int t = 0; t < rows; ++t) {
    PopulationFitness f;
    f.iteration = t;
    for (int i = 0; i < n; ++i) f.values.push_back(scale * std::sin(0.7 * t + 1.3 * i));
    b.push(f);
  }
  return b;
}

nn::MetaModel small_meta(int n, int k, std::uint64_t seed) {
  return nn::MetaModel::initialized({n, 8, k}, nn::generator_spec(8, 4), seed);
}

}  // namespace

TEST_SUITE("meta_pm") {

TEST_CASE("replay buffer keeps the last k rows") {
  auto b = filled(3, 4, 5);
  CHECK(b.size() == 3);
  CHECK(b.rows().front().iteration == 2);
  CHECK(b.rows().back().iteration == 4);
  const auto w = b.window();
  CHECK(w.rows() == 3);
  CHECK(w.cols() == 4);
  CHECK(w(2, 1) == std::sin(0.7 * 4 + 1.3));

  auto partial = filled(4, 2, 2);
  const auto pw = partial.window();
  CHECK(pw.row(0) == pw.row(1));
  CHECK(pw.row(1) == pw.row(2));

  PopulationReplayBuffer empty(3, 2);
  CHECK_THROWS_AS(empty.window(), StateError);
  CHECK_THROWS(b.push({{1.0, 2.0}, 10}));
  CHECK_THROWS(b.push({{1.0, 2.0, 3.0, 4.0}, 4}));
}

TEST_CASE("zero meta parameters propose range midpoints") {
  const nn::MetaModel zero({4, 8, 3}, nn::generator_spec(8, 4));
  const auto h = propose_hyperparams(zero, filled(3, 4, 3), HyperRanges{});
  CHECK(h.sigma == doctest::Approx(0.055).epsilon(1e-15));
  CHECK(h.alpha == doctest::Approx(0.020).epsilon(1e-15));
}

TEST_CASE("proposals depend on the buffer and nothing else") {
  const auto meta = small_meta(4, 3, 5);
  const auto a = filled(3, 4, 3);
  PopulationReplayBuffer b(3, 4);
  for (int t = 0; t < 3; ++t) b.push({{t == 0 ? 1.0 : 0.0, t == 1 ? 1.0 : 0.0, t == 2 ? 1.0 : 0.0, 0.0}, t});
  const auto ha = propose_hyperparams(meta, a, HyperRanges{});
  const auto ha2 = propose_hyperparams(meta, a, HyperRanges{});
  const auto hb = propose_hyperparams(meta, b, HyperRanges{});
  CHECK(ha.sigma == ha2.sigma);
  CHECK(ha.alpha == ha2.alpha);
  CHECK((ha.sigma != hb.sigma || ha.alpha != hb.alpha));
}

TEST_CASE("l = 1 meta fitness is f after one step with the proposed H") {
  EsConfig es;
  es.population = 10;
  const auto f = test::sphere_fn();
  const auto meta = small_meta(10, 2, 8);
  const auto buf = filled(2, 10, 2);
  const ParamVector theta = ParamVector::Constant(3, 1.0);
  const std::uint64_t seed = 77;
  LookaheadContext ctx{&es, &f, 4, seed};
  const double F = estimate_meta_fitness(meta, theta, buf, HyperRanges{}, 1, ctx);

  const auto h = propose_hyperparams(meta, buf, HyperRanges{});
  const auto step = es_step(theta, es, h, f, {rng::derive(seed, {0}), 4, false});
  CHECK(F == f(step.theta, {4, 0}));
}

TEST_CASE("collapsed alpha range makes the lookahead a no-op") {
  EsConfig es;
  es.population = 6;
  const auto f = test::sphere_fn();
  HyperRanges r;
  r.alpha = {0.0, 0.0};
  r.allow_degenerate = true;
  const ParamVector theta = ParamVector::Constant(4, 0.7);
  for (std::uint64_t s : {1u, 2u, 3u}) {
    LookaheadContext ctx{&es, &f, 0, s};
    CHECK(estimate_meta_fitness(small_meta(6, 2, s), theta, filled(2, 6, 2), r, 2, ctx) == -theta.squaredNorm());
  }
}

TEST_CASE("far from the optimum a larger step scores higher") {
  // one-step quadratic improvement: with shared noise, theta' = theta + alpha g,
  // and -|theta + alpha g|^2 increases with alpha while alpha |g| < |theta|
  EsConfig es;
  es.population = 20;
  const auto f = test::sphere_fn();
  const ParamVector theta = ParamVector::Constant(5, 4.0);
  double prev = -1e300;
  for (double alpha = 0.016; alpha <= 0.024 + 1e-12; alpha += 0.001) {
    LookaheadContext ctx{&es, &f, 0, 31};
    const double v = one_step_return({0.05, alpha}, theta, 3, ctx);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("meta update zero cases") {
  EsConfig es;
  es.population = 6;
  MetaEsConfig cfg;
  cfg.population = 8;
  cfg.repeats = 1;
  const auto meta = small_meta(6, 2, 3);
  const auto buf = filled(2, 6, 2);
  const ParamVector theta = ParamVector::Constant(3, 1.0);

  const auto flat = meta_es_update(meta, theta, buf, cfg, HyperRanges{}, es, test::constant_fn(), 0, {1, 2});
  CHECK(flat.ok);
  CHECK(test::bit_equal(flat.params, meta.flat()));

  cfg.learning_rate = 0.0;
  const auto frozen = meta_es_update(meta, theta, buf, cfg, HyperRanges{}, es, test::sphere_fn(), 0, {1, 2});
  CHECK(frozen.ok);
  CHECK(test::bit_equal(frozen.params, meta.flat()));
}

TEST_CASE("meta update arithmetic with m = 2") {
  EsConfig es;
  es.population = 6;
  MetaEsConfig cfg;
  cfg.population = 2;
  cfg.repeats = 1;
  cfg.shaping = Shaping::raw;
  cfg.learning_rate = 0.3;
  cfg.noise = 0.5;
  const auto meta = small_meta(6, 2, 3);
  const auto buf = filled(2, 6, 2);
  const ParamVector theta = ParamVector::Constant(3, 1.0);
  const auto f = test::sphere_fn();
  const MetaUpdateSeeds seeds{11, 12};
  const auto out = meta_es_update(meta, theta, buf, cfg, HyperRanges{}, es, f, 0, seeds);
  REQUIRE(out.ok);

  const auto dim = meta.flat().size();
  const Eigen::VectorXd e1 = meta_noise(seeds.noise_seed, 0, dim);
  const Eigen::VectorXd e2 = meta_noise(seeds.noise_seed, 1, dim);
  std::vector<double> F;
  for (const auto& e : {e1, e2}) {
    nn::MetaModel cand = meta;
    cand.flat() += cfg.noise * e;
    LookaheadContext ctx{&es, &f, 0, seeds.lookahead_seed};
    F.push_back(estimate_meta_fitness(cand, theta, buf, HyperRanges{}, 1, ctx));
  }
  CHECK(out.fitness == F);
  const Eigen::VectorXd expected = meta.flat() + cfg.learning_rate / (2.0 * cfg.noise) * (F[0] * e1 + F[1] * e2);
  CHECK((out.params - expected).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + expected.cwiseAbs().maxCoeff()));
}

TEST_CASE("meta update never touches theta and reports failures") {
  EsConfig es;
  es.population = 6;
  MetaEsConfig cfg;
  cfg.population = 4;
  cfg.repeats = 1;
  const auto meta = small_meta(6, 2, 3);
  const ParamVector theta = ParamVector::Constant(3, 1.0);
  const ParamVector copy = theta;
  meta_es_update(meta, theta, filled(2, 6, 2), cfg, HyperRanges{}, es, test::sphere_fn(), 0, {1, 2});
  CHECK(test::bit_equal(theta, copy));

  FitnessFn bad = [](const ParamVector&, const EvalContext&) { return std::nan(""); };
  const auto failed = meta_es_update(meta, theta, filled(2, 6, 2), cfg, HyperRanges{}, es, bad, 0, {1, 2});
  CHECK_FALSE(failed.ok);
  CHECK(test::bit_equal(failed.params, meta.flat()));
  CHECK(failed.diagnostic.find("skipped") != std::string::npos);

  CHECK_THROWS_AS(meta_es_update(meta, theta, PopulationReplayBuffer(2, 6), cfg, HyperRanges{}, es,
                                 test::sphere_fn(), 0, {1, 2}),
                  StateError);
}

TEST_CASE("meta update is identical across worker counts") {
  EsConfig es;
  es.population = 6;
  MetaEsConfig one;
  one.population = 6;
  one.repeats = 2;
  MetaEsConfig many = one;
  many.workers = 3;
  const auto meta = small_meta(6, 2, 3);
  const ParamVector theta = ParamVector::Constant(3, 1.0);
  const auto a = meta_es_update(meta, theta, filled(2, 6, 2), one, HyperRanges{}, es, test::sphere_fn(), 0, {5, 6});
  const auto b = meta_es_update(meta, theta, filled(2, 6, 2), many, HyperRanges{}, es, test::sphere_fn(), 0, {5, 6});
  CHECK(test::bit_equal(a.params, b.params));
}

}
