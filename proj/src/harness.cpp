#include "bierl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include "bierl/checkpoint.hpp"
#include "bierl/errors.hpp"
#include "bierl/parallel.hpp"

namespace bierl {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InvariantError("cannot format double");
  return std::string(buf, p);
}

std::string csv_row(const RunRecord& r) {
  std::string s;
  s += std::to_string(r.iteration);
  for (double v : {r.ret, r.pop_mean, r.pop_max, r.sigma, r.alpha}) {
    s += ',';
    s += format_double(v);
  }
  s += ',' + std::to_string(r.inner_evals);
  s += ',' + std::to_string(r.lookahead_evals);
  s += ',' + std::to_string(r.seed);
  return s;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  return f;
}

void finish(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

template <class T>
T parse_field(const std::string& text, const std::string& path, int line) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw FormatError(path + ":" + std::to_string(line) + ": bad field '" + text + "'");
  return v;
}

}  // namespace

void write_run_csv(const std::string& path, const std::vector<RunRecord>& records) {
  auto f = open_out(path);
  f << kCsvHeader << '\n';
  for (const auto& r : records) f << csv_row(r) << '\n';
  finish(f, path);
}

std::vector<RunRecord> read_run_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != kCsvHeader)
    throw FormatError("'" + path + "' does not start with the run CSV header");
  std::vector<RunRecord> out;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw FormatError(path + ":" + std::to_string(line_no) + ": expected 9 columns");
    RunRecord r;
    r.iteration = parse_field<std::int64_t>(cells[0], path, line_no);
    r.ret = parse_field<double>(cells[1], path, line_no);
    r.pop_mean = parse_field<double>(cells[2], path, line_no);
    r.pop_max = parse_field<double>(cells[3], path, line_no);
    r.sigma = parse_field<double>(cells[4], path, line_no);
    r.alpha = parse_field<double>(cells[5], path, line_no);
    r.inner_evals = parse_field<std::uint64_t>(cells[6], path, line_no);
    r.lookahead_evals = parse_field<std::uint64_t>(cells[7], path, line_no);
    r.seed = parse_field<std::uint64_t>(cells[8], path, line_no);
    out.push_back(r);
  }
  return out;
}

Stat describe(const std::vector<double>& values) {
  Stat s;
  s.values = values;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

double area_under_curve(const std::vector<RunRecord>& records) {
  double sum = 0.0;
  for (const auto& r : records) sum += r.ret;
  return sum;
}

std::vector<int> recovery_iterations(const std::vector<RunRecord>& records, const FitnessTask& task,
                                     double fraction) {
  std::vector<int> out;
  if (task.kind != TaskKind::shifted_sphere_nonstationary) return out;
  const double threshold = -fraction * task.shift_norm * task.shift_norm;
  const auto total = static_cast<std::int64_t>(records.size());
  for (std::int64_t s = task.shift_every; s < total; s += task.shift_every) {
    const std::int64_t limit = std::min<std::int64_t>(task.shift_every, total - s);
    std::int64_t r = 0;
    while (r < limit && records[static_cast<std::size_t>(s + r)].ret < threshold) ++r;
    out.push_back(static_cast<int>(r));
  }
  return out;
}

namespace {

double median(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json to_json(const Stat& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"values", s.values}};
}

std::string run_stem(Mode mode, std::uint64_t seed) {
  return to_string(mode) + "_seed" + std::to_string(seed);
}

}  // namespace

const ModeSummary* ExperimentResult::find(Mode mode) const {
  for (const auto& m : modes)
    if (m.mode == mode) return &m;
  return nullptr;
}

const std::vector<std::vector<RunRecord>>* ExperimentResult::runs(Mode mode) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i].mode == mode) return &records[i];
  return nullptr;
}

std::uint64_t run_budget(const LoopConfig& cfg, std::int64_t iterations) {
  const auto t = static_cast<std::uint64_t>(iterations);
  const auto n = static_cast<std::uint64_t>(cfg.es.population);
  std::uint64_t total = t * n;
  if (cfg.mode == Mode::baseline_fixed) return total;
  const auto updates = t / static_cast<std::uint64_t>(cfg.meta.interval);
  const auto width = static_cast<std::uint64_t>(cfg.mode == Mode::pm ? cfg.meta.population : cfg.bo.budget);
  return total + updates * width * static_cast<std::uint64_t>(cfg.meta.repeats) * (n + 1);
}

std::optional<WarmStart> prepare_warm_start(const RunConfig& cfg) {
  if (!cfg.warm.enabled) return std::nullopt;
  const LoopConfig loop = cfg.loop_for(Mode::pm, cfg.warm.seed);
  if (!cfg.warm.load_path.empty()) {
    const auto cp = load_checkpoint(cfg.warm.load_path, loop.encoder_spec(), loop.generator_spec());
    std::uint64_t evals = 0;
    if (cp.config.contains("pretrain_evals")) evals = cp.config.at("pretrain_evals").get<std::uint64_t>();
    return WarmStart{meta_from_checkpoint(cp, loop.encoder_spec(), loop.generator_spec()), evals};
  }
  auto pre = pretrain_meta(cfg.warm.task, cfg.warm.meta_updates, loop);
  if (!cfg.warm.save_path.empty()) {
    const nlohmann::json extra{{"loop", to_json(loop)},
                               {"task", to_json(cfg.warm.task)},
                               {"meta_updates", cfg.warm.meta_updates},
                               {"pretrain_evals", pre.evaluations}};
    save_checkpoint(cfg.warm.save_path, meta_checkpoint(pre.meta, extra));
  }
  return WarmStart{std::move(pre.meta), pre.evaluations};
}

ExperimentResult run_experiment(const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());

  const bool has_pm = std::find(cfg.modes.begin(), cfg.modes.end(), Mode::pm) != cfg.modes.end();
  const std::optional<WarmStart> warm = has_pm ? prepare_warm_start(cfg) : std::nullopt;
  const std::uint64_t pretrain = warm ? warm->evaluations : 0;

  std::vector<LoopConfig> loops;
  std::uint64_t adaptive_budget = 0;
  for (Mode m : cfg.modes) {
    loops.push_back(cfg.loop_for(m, 0));
    if (m != Mode::baseline_fixed)
      adaptive_budget = std::max(adaptive_budget, run_budget(loops.back(), cfg.total_iterations) +
                                                      (m == Mode::pm ? pretrain : 0));
  }
  for (auto& l : loops)
    if (l.mode == Mode::baseline_fixed && cfg.match_budget && adaptive_budget > 0) {
      const auto t = static_cast<std::uint64_t>(cfg.total_iterations);
      auto n = static_cast<int>((adaptive_budget + t - 1) / t);
      if (l.es.antithetic && n % 2 == 1) ++n;
      l.es.population = std::max(l.es.population, n);
    }

  struct Job {
    std::size_t mode_index;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < cfg.modes.size(); ++i)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({i, s});

  ExperimentResult result;
  result.records.assign(cfg.modes.size(), std::vector<std::vector<RunRecord>>(cfg.seeds.size()));
  std::vector<std::string> errors(jobs.size());
  std::mutex log_mutex;
  const int workers = cfg.workers > 0 ? cfg.workers : default_workers();

  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const auto [mi, si] = jobs[j];
    const std::uint64_t seed = cfg.seeds[si];
    LoopConfig loop = loops[mi];
    loop.seed = seed;
    const std::string stem = run_stem(loop.mode, seed);
    try {
      const FitnessTask spec = cfg.task_for(seed);
      const Task task(spec);
      const Runner runner(loop, task);
      RunState state = runner.initial_state(loop.mode == Mode::pm && warm ? std::optional(warm->meta)
                                                                          : std::nullopt);
      auto& records = result.records[mi][si];
      std::vector<double> wall;
      runner.run(state, cfg.total_iterations, [&](const RunRecord& r, const RunState& s) {
        records.push_back(r);
        wall.push_back(r.wall_ms);
        if (cfg.checkpoint_every > 0 && s.iteration % cfg.checkpoint_every == 0) {
          auto cp = capture(loop, spec, s);
          cp.config["total_iterations"] = cfg.total_iterations;
          save_checkpoint((fs::path(cfg.output_dir) / (stem + ".ckpt")).string(), cp);
        }
      });
      write_run_csv((fs::path(cfg.output_dir) / (stem + ".csv")).string(), records);
      const auto timing_path = (fs::path(cfg.output_dir) / (stem + ".timing.csv")).string();
      auto tf = open_out(timing_path);
      tf << "iteration,wall_ms\n";
      for (std::size_t i = 0; i < wall.size(); ++i) tf << i << ',' << format_double(wall[i]) << '\n';
      finish(tf, timing_path);
      if (cfg.dump_bo && loop.mode == Mode::npm) {
        const auto bo_path = (fs::path(cfg.output_dir) / (stem + ".bo.csv")).string();
        auto bf = open_out(bo_path);
        bf << "round,u_sigma,u_alpha,value\n";
        for (const auto& o : state.bo.observations) {
          bf << o.round;
          for (double u : o.point) bf << ',' << format_double(u);
          bf << ',' << format_double(o.value) << '\n';
        }
        finish(bf, bo_path);
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << stem << ": final return " << format_double(records.back().ret);
        for (const auto& d : state.diagnostics) *log << "\n  " << d;
        *log << std::endl;
      }
    } catch (const std::exception& e) {
      errors[j] = stem + ": " + e.what();
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << errors[j] << std::endl;
      }
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) result.failures.push_back(e);

  nlohmann::json modes = nlohmann::json::object();
  for (std::size_t mi = 0; mi < cfg.modes.size(); ++mi) {
    ModeSummary ms;
    ms.mode = cfg.modes[mi];
    ms.population = loops[mi].es.population;
    std::vector<double> finals, aucs;
    std::vector<nlohmann::json> files;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const auto& recs = result.records[mi][si];
      if (recs.empty() || static_cast<std::int64_t>(recs.size()) != cfg.total_iterations) continue;
      finals.push_back(recs.back().ret);
      aucs.push_back(area_under_curve(recs));
      ms.inner_evals = recs.back().inner_evals;
      ms.lookahead_evals = recs.back().lookahead_evals;
      const auto rec = recovery_iterations(recs, cfg.task_for(cfg.seeds[si]), cfg.recovery_fraction);
      ms.recovery.insert(ms.recovery.end(), rec.begin(), rec.end());
      ms.csv_files.push_back(run_stem(ms.mode, cfg.seeds[si]) + ".csv");
    }
    ms.pretrain_evals = ms.mode == Mode::pm ? pretrain : 0;
    ms.total_evals = ms.inner_evals + ms.lookahead_evals + ms.pretrain_evals;
    ms.final_return = describe(finals);
    ms.auc = describe(aucs);
    if (!ms.recovery.empty()) ms.recovery_median = median(ms.recovery);

    nlohmann::json j{{"population", ms.population},
                     {"inner_evals", ms.inner_evals},
                     {"lookahead_evals", ms.lookahead_evals},
                     {"pretrain_evals", ms.pretrain_evals},
                     {"total_evals", ms.total_evals},
                     {"final_return", to_json(ms.final_return)},
                     {"auc", to_json(ms.auc)},
                     {"runs", ms.csv_files}};
    if (ms.recovery_median) j["recovery"] = {{"median", *ms.recovery_median}, {"values", ms.recovery}};
    modes[to_string(ms.mode)] = std::move(j);
    result.modes.push_back(std::move(ms));
  }

  std::vector<std::uint64_t> seeds(cfg.seeds.begin(), cfg.seeds.end());
  result.summary = {{"profile", to_string(cfg.profile)},
                    {"task", to_json(cfg.task)},
                    {"task_seed", cfg.task_seed ? nlohmann::json(*cfg.task_seed) : nlohmann::json("run seed")},
                    {"total_iterations", cfg.total_iterations},
                    {"seeds", seeds},
                    {"budget_matched", cfg.match_budget},
                    {"warm_start", has_pm && warm.has_value()},
                    {"modes", modes},
                    {"failures", result.failures}};
  const auto summary_path = (fs::path(cfg.output_dir) / "summary.json").string();
  auto sf = open_out(summary_path);
  sf << result.summary.dump(2) << '\n';
  finish(sf, summary_path);
  return result;
}

namespace {

std::string value_label(double v) {
  std::string s = format_double(v);
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

int integral_value(const std::string& axis, double v) {
  if (v != std::floor(v) || v < 1 || v > 1e9)
    throw ConfigError("sweep axis " + axis + " needs positive integer values (got " + format_double(v) + ")");
  return static_cast<int>(v);
}

void apply_axis(RunConfig& c, const std::string& axis, double v) {
  if (axis == "n")
    c.loop.es.population = integral_value(axis, v);
  else if (axis == "m")
    c.loop.meta.population = integral_value(axis, v);
  else if (axis == "omega")
    c.loop.meta.noise = v;
  else if (axis == "beta")
    c.loop.meta.learning_rate = v;
  else if (axis == "k")
    c.loop.meta.interval = integral_value(axis, v);
  else if (axis == "l")
    c.loop.meta.repeats = integral_value(axis, v);
  else
    throw ConfigError("unknown sweep axis '" + axis + "'");
}

}  // namespace

SweepResult run_sweep(const RunConfig& cfg, std::ostream* log) {
  if (!cfg.sweep) throw ConfigError("sweep mode needs [sweep] axis and values");
  cfg.validate();
  SweepResult out;
  out.axis = cfg.sweep->axis;
  std::set<double> distinct(cfg.sweep->values.begin(), cfg.sweep->values.end());
  out.values.assign(distinct.begin(), distinct.end());
  if (out.values.size() != cfg.sweep->values.size()) {
    out.warnings.push_back("duplicate sweep values removed; running " + std::to_string(out.values.size()) +
                           " distinct values");
    if (log) *log << "warning: " << out.warnings.back() << std::endl;
  }
  for (double v : out.values) {
    RunConfig c = cfg;
    c.sweep.reset();
    apply_axis(c, out.axis, v);
    c.output_dir = (fs::path(cfg.output_dir) / (out.axis + "_" + value_label(v))).string();
    if (log) *log << "sweep " << out.axis << " = " << format_double(v) << std::endl;
    out.results.push_back(run_experiment(c, log));
  }

  out.table_path = (fs::path(cfg.output_dir) / ("sweep_" + out.axis + ".csv")).string();
  auto f = open_out(out.table_path);
  f << "value,mode,population,final_mean,final_std,auc_mean,auc_std,total_evals,failures\n";
  for (std::size_t i = 0; i < out.values.size(); ++i)
    for (const auto& m : out.results[i].modes)
      f << format_double(out.values[i]) << ',' << to_string(m.mode) << ',' << m.population << ','
        << format_double(m.final_return.mean) << ',' << format_double(m.final_return.std) << ','
        << format_double(m.auc.mean) << ',' << format_double(m.auc.std) << ',' << m.total_evals << ','
        << out.results[i].failures.size() << '\n';
  finish(f, out.table_path);
  return out;
}

std::vector<RunRecord> resume_run(const std::string& checkpoint_path, std::int64_t total_iterations,
                                  const std::string& output_dir, int checkpoint_every) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  if (!cp.config.contains("loop") || !cp.config.contains("task"))
    throw FormatError("'" + checkpoint_path + "' is not a run checkpoint");
  LoopConfig loop;
  FitnessTask spec;
  try {
    loop = loop_from_json(cp.config.at("loop"));
    spec = task_from_json(cp.config.at("task"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint configuration is malformed: ") + e.what());
  }
  if (total_iterations <= 0 && cp.config.contains("total_iterations"))
    total_iterations = cp.config.at("total_iterations").get<std::int64_t>();
  if (total_iterations < cp.iteration)
    throw ConfigError("checkpoint is already at iteration " + std::to_string(cp.iteration));

  const Task task(spec);
  const Runner runner(loop, task);
  RunState state = restore(runner, cp);
  std::vector<RunRecord> records;
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + output_dir + "'");
  const std::string stem = run_stem(loop.mode, loop.seed);
  runner.run(state, total_iterations, [&](const RunRecord& r, const RunState& s) {
    records.push_back(r);
    if (checkpoint_every > 0 && s.iteration % checkpoint_every == 0) {
      auto next = capture(loop, spec, s);
      next.config["total_iterations"] = total_iterations;
      save_checkpoint((fs::path(output_dir) / (stem + ".ckpt")).string(), next);
    }
  });
  write_run_csv((fs::path(output_dir) / (stem + ".resumed.csv")).string(), records);
  return records;
}

}  // namespace bierl
