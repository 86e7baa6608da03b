#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"

#include "bierl/errors.hpp"
#include "bierl/harness.hpp"
#include "bierl/plot.hpp"

using namespace bierl;
namespace fs = std::filesystem;

namespace {

std::vector<RunRecord> curve(double offset, int n = 5) {
  std::vector<RunRecord> out;
  for (int i = 0; i < n; ++i) {
    RunRecord r;
    r.iteration = i;
    r.ret = offset - 1.0 / (i + 1);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("plot") {

TEST_CASE("single run collapses the band") {
  const auto dir = test::scratch_dir("plot_single");
  write_run_csv((dir / "pm_seed1.csv").string(), curve(0.0));
  const auto c = load_curves({(dir / "pm_seed1.csv").string()});
  REQUIRE(c.size() == 1);
  CHECK(c[0].label == "pm");
  for (double s : c[0].std) CHECK(s == 0.0);
  CHECK(c[0].mean[2] == -1.0 / 3.0);
}

TEST_CASE("identical runs give a zero-width band, different runs do not") {
  const auto dir = test::scratch_dir("plot_pairs");
  write_run_csv((dir / "npm_seed1.csv").string(), curve(1.0));
  write_run_csv((dir / "npm_seed2.csv").string(), curve(1.0));
  write_run_csv((dir / "baseline_fixed_seed1.csv").string(), curve(0.0));
  write_run_csv((dir / "baseline_fixed_seed2.csv").string(), curve(2.0));
  const auto c = load_curves({(dir / "npm_seed1.csv").string(), (dir / "npm_seed2.csv").string(),
                              (dir / "baseline_fixed_seed1.csv").string(),
                              (dir / "baseline_fixed_seed2.csv").string()});
  REQUIRE(c.size() == 2);
  CHECK(c[0].runs == 2);
  for (double s : c[0].std) CHECK(s == 0.0);
  for (double s : c[1].std) CHECK(s == doctest::Approx(std::sqrt(2.0)));
  plot_curves({(dir / "npm_seed1.csv").string(), (dir / "baseline_fixed_seed1.csv").string()},
              (dir / "out.svg").string());
  const auto svg = test::slurp(dir / "out.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("class=\"band\"") != std::string::npos);
}

TEST_CASE("mismatched grids are an error") {
  const auto dir = test::scratch_dir("plot_grid");
  write_run_csv((dir / "pm_seed1.csv").string(), curve(0.0, 5));
  write_run_csv((dir / "pm_seed2.csv").string(), curve(0.0, 6));
  CHECK_THROWS_AS(load_curves({(dir / "pm_seed1.csv").string(), (dir / "pm_seed2.csv").string()}), ConfigError);
  CHECK_THROWS_AS(load_curves({}), ConfigError);
  CHECK_THROWS_AS(load_curves({(dir / "absent.csv").string()}), IoError);
}

}
