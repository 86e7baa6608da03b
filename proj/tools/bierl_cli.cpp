#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bierl/checkpoint.hpp"
#include "bierl/config.hpp"
#include "bierl/errors.hpp"
#include "bierl/harness.hpp"
#include "bierl/plot.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kIo = 3 };

struct CommonOptions {
  std::string config_path;
  std::string profile;
  std::string seeds;
  std::string out;
  std::vector<std::string> overrides;
  std::string save_meta;
  std::string load_meta;
  int checkpoint_every = -1;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "Config file ([section] key = value)");
    app->add_option("-p,--profile", profile, "quickstart or paper_scale");
    app->add_option("--seeds", seeds, "Comma-separated seeds, e.g. 1,2,3");
    app->add_option("-o,--out", out, "Output directory");
    app->add_option("-s,--set", overrides, "Override section.key=value (repeatable)");
    app->add_option("--save-meta", save_meta, "Write the warm-start meta model here");
    app->add_option("--load-meta", load_meta, "Warm-start PM runs from this meta model");
    app->add_option("--checkpoint-every", checkpoint_every, "Checkpoint every N iterations");
  }

  bierl::RunConfig build() const {
    std::optional<bierl::Profile> profile_override;
    if (!profile.empty()) profile_override = bierl::profile_from_string(profile);
    bierl::RunConfig cfg = config_path.empty()
                               ? bierl::profile_defaults(profile_override.value_or(bierl::Profile::quickstart))
                               : bierl::load_config(config_path, profile_override);
    for (const auto& o : overrides) bierl::apply_override(cfg, o);
    if (!seeds.empty()) bierl::apply_override(cfg, "run.seeds=[" + seeds + "]");
    if (!out.empty()) cfg.output_dir = out;
    if (!save_meta.empty()) cfg.warm.save_path = save_meta;
    if (!load_meta.empty()) {
      cfg.warm.load_path = load_meta;
      cfg.warm.enabled = true;
    }
    if (checkpoint_every >= 0) cfg.checkpoint_every = checkpoint_every;
    return cfg;
  }
};

void print_summary(const bierl::ExperimentResult& r) {
  for (const auto& m : r.modes) {
    std::cout << bierl::to_string(m.mode) << ": final " << m.final_return.mean << " +- " << m.final_return.std
              << ", auc " << m.auc.mean << " +- " << m.auc.std << ", evals " << m.total_evals;
    if (m.recovery_median) std::cout << ", median recovery " << *m.recovery_median;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel evolution strategies with online hyperparameter adaptation"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, pre_opts;
  std::string resume;
  std::int64_t resume_until = 0;
  auto* run = app.add_subcommand("run", "Run every configured (mode, seed) pair");
  run_opts.attach(run);
  run->add_option("--resume", resume, "Continue a run from a checkpoint file");
  run->add_option("--until", resume_until, "Iteration to resume to (default: the checkpointed total)");

  auto* sweep = app.add_subcommand("sweep", "Repeat the experiment over one axis (n, m, omega, beta, k, l)");
  sweep_opts.attach(sweep);
  std::string axis;
  std::vector<double> values;
  sweep->add_option("--axis", axis, "Sweep axis");
  sweep->add_option("--values", values, "Axis values")->delimiter(',');

  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the meta model on the warm-start task");
  pre_opts.attach(pretrain);
  int updates = -1;
  pretrain->add_option("--iterations", updates, "Meta updates on the pretraining task");

  auto* plot = app.add_subcommand("plot", "Mean +- std learning curves as SVG");
  std::vector<std::string> csvs;
  std::string svg = "curves.svg";
  std::string column = "return";
  plot->add_option("csv", csvs, "Run CSV files")->required();
  plot->add_option("-o,--out", svg, "Output SVG path");
  plot->add_option("--column", column, "return, pop_mean, pop_max, sigma or alpha");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (!resume.empty()) {
        const std::string out = run_opts.out.empty() ? "." : run_opts.out;
        const auto recs = bierl::resume_run(resume, resume_until, out, std::max(run_opts.checkpoint_every, 0));
        std::cout << "resumed " << recs.size() << " iterations\n";
        return kOk;
      }
      const auto cfg = run_opts.build();
      const auto result = bierl::run_experiment(cfg, &std::cerr);
      print_summary(result);
      if (!result.failures.empty()) {
        for (const auto& f : result.failures) std::cerr << "failed: " << f << '\n';
        return kRuntime;
      }
    } else if (*sweep) {
      auto cfg = sweep_opts.build();
      if (!axis.empty() || !values.empty()) {
        if (!cfg.sweep) cfg.sweep.emplace();
        if (!axis.empty()) cfg.sweep->axis = axis;
        if (!values.empty()) cfg.sweep->values = values;
      }
      const auto result = bierl::run_sweep(cfg, &std::cerr);
      std::cout << "wrote " << result.table_path << '\n';
      for (const auto& r : result.results)
        if (!r.failures.empty()) return kRuntime;
    } else if (*pretrain) {
      auto cfg = pre_opts.build();
      if (updates >= 0) cfg.warm.meta_updates = updates;
      cfg.warm.enabled = true;
      cfg.warm.load_path.clear();
      if (cfg.warm.save_path.empty())
        cfg.warm.save_path = (std::filesystem::path(cfg.output_dir) / "meta.ckpt").string();
      std::filesystem::create_directories(std::filesystem::path(cfg.warm.save_path).parent_path().empty()
                                              ? std::filesystem::path(".")
                                              : std::filesystem::path(cfg.warm.save_path).parent_path());
      cfg.validate();
      const auto warm = bierl::prepare_warm_start(cfg);
      std::cout << "pretrained " << cfg.warm.meta_updates << " meta updates (" << warm->evaluations
                << " evaluations) -> " << cfg.warm.save_path << '\n';
    } else if (*plot) {
      bierl::plot_curves(csvs, svg, column);
      std::cout << "wrote " << svg << '\n';
    }
  } catch (const bierl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const bierl::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const bierl::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
