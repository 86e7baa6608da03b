#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"

#include "bierl/checkpoint.hpp"
#include "bierl/errors.hpp"
#include "bierl/rng.hpp"

using namespace bierl;
namespace fs = std::filesystem;

namespace {

LoopConfig small(Mode mode, std::uint64_t seed = 1) {
  LoopConfig c;
  c.mode = mode;
  c.seed = seed;
  c.es.population = 10;
  c.meta.population = 5;
  c.meta.repeats = 1;
  c.meta.interval = 4;
  c.bo.budget = 3;
  c.lstm_hidden = 6;
  c.generator_hidden = 3;
  return c;
}

const FitnessTask kTask{.kind = TaskKind::shifted_sphere_nonstationary, .dim = 5, .seed = 3, .shift_every = 7};

std::vector<RunRecord> run_from(const Runner& r, RunState s, std::int64_t total) {
  std::vector<RunRecord> out;
  r.run(s, total, [&](const RunRecord& rec, const RunState&) { out.push_back(rec); });
  return out;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save then load is an exact round trip") {
  const auto dir = test::scratch_dir("ckpt_roundtrip");
  for (Mode mode : {Mode::pm, Mode::npm, Mode::baseline_fixed}) {
    const auto cfg = small(mode);
    const Task task(kTask);
    const Runner r(cfg, task);
    auto s = r.initial_state();
    r.run(s, 9);
    const auto cp = capture(cfg, kTask, s);
    const auto path = (dir / (to_string(mode) + ".ckpt")).string();
    save_checkpoint(path, cp);
    const auto back = load_checkpoint(path);
    CHECK(back == cp);
    save_checkpoint((dir / "again.ckpt").string(), back);
    CHECK(test::slurp(path) == test::slurp(dir / "again.ckpt"));
    if (mode == Mode::pm) {
      CHECK(test::bit_equal(back.meta, s.meta->flat()));
      CHECK(back.buffer_rows.size() == 4);
    }
    if (mode == Mode::npm) CHECK(back.bo_observations.size() == s.bo.observations.size());
  }
}

TEST_CASE("spec hash mismatch is rejected") {
  const auto dir = test::scratch_dir("ckpt_hash");
  const auto cfg = small(Mode::pm);
  const auto meta = nn::MetaModel::initialized(cfg.encoder_spec(), cfg.generator_spec(), 4);
  auto cp = meta_checkpoint(meta);
  const auto path = (dir / "meta.ckpt").string();
  save_checkpoint(path, cp);
  CHECK_NOTHROW(load_checkpoint(path, cfg.encoder_spec(), cfg.generator_spec()));
  const nn::LstmSpec other{11, 6, 4};
  CHECK_THROWS_AS(load_checkpoint(path, other, cfg.generator_spec()), FormatError);

  cp.encoder_hash = "0000000000000000";
  save_checkpoint(path, cp);
  try {
    load_checkpoint(path, cfg.encoder_spec(), cfg.generator_spec());
    FAIL("expected an incompatibility error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("incompatible") != std::string::npos);
  }
}

TEST_CASE("version mismatch is rejected") {
  const auto dir = test::scratch_dir("ckpt_version");
  auto cp = meta_checkpoint(nn::MetaModel::initialized({3, 2, 2}, nn::generator_spec(2, 2), 1));
  cp.version = kCheckpointVersion + 1;
  save_checkpoint((dir / "v.ckpt").string(), cp);
  CHECK_THROWS_AS(load_checkpoint((dir / "v.ckpt").string()), FormatError);
}

TEST_CASE("truncated and corrupt files give format errors") {
  const auto dir = test::scratch_dir("ckpt_trunc");
  const auto cfg = small(Mode::pm);
  const Task task(kTask);
  const Runner r(cfg, task);
  auto s = r.initial_state();
  r.run(s, 5);
  const auto path = dir / "full.ckpt";
  save_checkpoint(path.string(), capture(cfg, kTask, s));
  const auto bytes = test::slurp(path);
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, std::size_t{40}, bytes.size() / 2,
                          bytes.size() - 8, bytes.size() - 1}) {
    write_bytes(dir / "cut.ckpt", bytes.substr(0, cut));
    CHECK_THROWS_AS(load_checkpoint((dir / "cut.ckpt").string()), FormatError);
  }
  write_bytes(dir / "extra.ckpt", bytes + "x");
  CHECK_THROWS_AS(load_checkpoint((dir / "extra.ckpt").string()), FormatError);
  std::string garbled = bytes;
  garbled[20] = '\x01';
  write_bytes(dir / "garbled.ckpt", garbled);
  CHECK_THROWS_AS(load_checkpoint((dir / "garbled.ckpt").string()), FormatError);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), IoError);
}

TEST_CASE("resume continues bit-exactly") {
  const auto dir = test::scratch_dir("ckpt_resume");
  for (Mode mode : {Mode::baseline_fixed, Mode::pm, Mode::npm}) {
    const auto cfg = small(mode, 6);
    const Task task(kTask);
    const Runner r(cfg, task);
    const auto full = run_from(r, r.initial_state(), 20);

    auto s = r.initial_state();
    r.run(s, 9);
    const auto path = (dir / "mid.ckpt").string();
    save_checkpoint(path, capture(cfg, kTask, s));
    const Runner fresh(cfg, task);
    const auto rest = run_from(fresh, restore(fresh, load_checkpoint(path)), 20);
    REQUIRE(rest.size() == 11);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      const auto& a = full[9 + i];
      const auto& b = rest[i];
      CHECK(a.iteration == b.iteration);
      CHECK(a.ret == b.ret);
      CHECK(a.pop_mean == b.pop_mean);
      CHECK(a.pop_max == b.pop_max);
      CHECK(a.sigma == b.sigma);
      CHECK(a.alpha == b.alpha);
      CHECK(a.inner_evals == b.inner_evals);
      CHECK(a.lookahead_evals == b.lookahead_evals);
    }
  }
}

TEST_CASE("restore refuses a different configuration") {
  const auto cfg = small(Mode::pm, 2);
  const Task task(kTask);
  const Runner r(cfg, task);
  auto s = r.initial_state();
  const auto cp = capture(cfg, kTask, s);
  auto other = cfg;
  other.seed = 3;
  const Runner r2(other, task);
  CHECK_THROWS_AS(restore(r2, cp), FormatError);
}

TEST_CASE("pretraining") {
  const auto cfg = small(Mode::pm, 1);
  const FitnessTask simple{.kind = TaskKind::sphere, .dim = 4};
  const auto none = pretrain_meta(simple, 0, cfg);
  const auto fresh = nn::MetaModel::initialized(cfg.encoder_spec(), cfg.generator_spec(),
                                                rng::derive(cfg.seed, {rng::kMetaInit}));
  CHECK(test::bit_equal(none.meta.flat(), fresh.flat()));
  CHECK(none.evaluations == 0);

  const auto a = pretrain_meta(simple, 2, cfg);
  const auto b = pretrain_meta(simple, 2, cfg);
  CHECK(a.iterations == 8);
  CHECK(a.evaluations == 8u * 10u + 2u * 5u * 1u * 11u);
  CHECK_FALSE(test::bit_equal(a.meta.flat(), fresh.flat()));
  const auto dir = test::scratch_dir("ckpt_pretrain");
  save_checkpoint((dir / "a.ckpt").string(), meta_checkpoint(a.meta));
  save_checkpoint((dir / "b.ckpt").string(), meta_checkpoint(b.meta));
  CHECK(test::slurp(dir / "a.ckpt") == test::slurp(dir / "b.ckpt"));
  const auto loaded = meta_from_checkpoint(load_checkpoint((dir / "a.ckpt").string()), cfg.encoder_spec(),
                                           cfg.generator_spec());
  CHECK(test::bit_equal(loaded.flat(), a.meta.flat()));
}

TEST_CASE("warm start transfers only the meta model") {
  const auto cfg = small(Mode::pm, 1);
  const auto pre = pretrain_meta(FitnessTask{.kind = TaskKind::sphere, .dim = 4}, 1, cfg);
  const Task target(kTask);
  const Runner r(cfg, target);
  const auto s = r.initial_state(pre.meta);
  CHECK(test::bit_equal(s.theta, target.initial_params(cfg.seed)));
  CHECK(test::bit_equal(s.meta->flat(), pre.meta.flat()));
}

}
