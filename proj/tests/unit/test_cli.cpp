#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qbvar/error.hpp"
#include "qbvar/experiment.hpp"
#include "synthetic.hpp"

using namespace qbvar;
using namespace qbvar::experiment;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Three-variable synthetic panel of levels and a matching small config.
json small_setup(const fs::path& dir, int months = 150) {
  Rng rng(61);
  Eigen::MatrixXd phi(3, 4);
  phi << 0.0, 0.3, 0.1, 0.0, 0.0, 0.0, 0.4, 0.1, 0.0, 0.1, 0.0, 0.5;
  Eigen::MatrixXd lam(3, 1);
  lam << 0.02, 0.01, 0.01;
  const Eigen::MatrixXd growth =
      testing::simulate_gaussian_var(phi, lam, Eigen::VectorXd::Constant(3, 0.0004), months - 1, rng).bottomRows(months - 1);
  testing::write_level_panel(dir / "panel.csv", dir / "tcodes.json", growth, {"oil", "cons", "pred"}, {2000, 1});
  return json{{"data", "panel.csv"},
              {"tcodes", "tcodes.json"},
              {"target", "oil"},
              {"variables", {"oil", "cons", "pred"}},
              {"quantiles", {0.1, 0.5, 0.9}},
              {"horizon", 3},
              {"mcmc", {{"iterations", 120}, {"burn_in", 40}, {"thin", 4}}},
              {"models", {{{"type", "qbvar"}, {"lags", 2}}, {{"type", "bvar"}, {"lags", 2}}, {{"type", "rw"}}}},
              {"evaluation_windows", {{{"label", "test"}, {"start", "2010-01"}, {"end", "2010-06"}}}},
              {"event_windows", {{{"label", "Gulf War"}, {"start", "1990-01"}, {"end", "1991-12"}},
                                 {{"label", "late"}, {"start", "2010-03"}, {"end", "2010-09"}}}},
              {"combinations", {{{"strategy", "fixed"}, {"lambda", 0.5}}, {{"strategy", "performance"}, {"window", 2}}}},
              {"seed", 7},
              {"output_dir", "out"}};
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const auto dir = testing::scratch_dir("cli_config");
  auto j = small_setup(dir);
  const auto c = ExperimentConfig::from_json(j, dir);
  CHECK(c.models.size() == 3);
  CHECK(c.models[0].id == "qbvar2");
  CHECK(c.models[2].id == "rw");
  CHECK(c.benchmarks == std::vector<std::string>{"bvar2", "rw"});
  CHECK(c.combine_qbvar == "qbvar2");
  CHECK(c.combine_benchmark == "bvar2");
  CHECK(c.data == dir / "panel.csv");
  CHECK(c.tcodes.at("oil") == data::TransformCode::LogDifference);
  CHECK(ExperimentConfig::from_json(c.to_json()).to_json() == c.to_json());

  auto bad = j;
  bad["variables"] = {"oil", "oil", "pred"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad, dir), InvalidArgument);
  bad = j;
  bad["benchmarks"] = {"nope"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad, dir), InvalidArgument);
  bad = j;
  bad["target"] = "missing";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad, dir), InvalidArgument);
  bad = j;
  bad["models"] = json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad, dir), InvalidArgument);

  ExperimentConfig defaults = ExperimentConfig::from_json(
      json{{"data", "x.csv"}, {"target", "oil"}, {"variables", {"oil"}}, {"models", {{{"type", "rw"}}}}});
  REQUIRE(defaults.evaluation_windows.size() == 2);
  CHECK(forecast_origins(defaults, {2025, 2}).size() == 205);
  CHECK(forecast_origins(defaults, {2025, 2}).back() == YearMonth{2025, 1});
  defaults.evaluation_windows.erase(defaults.evaluation_windows.begin());
  CHECK(forecast_origins(defaults, {2025, 2}).size() == 145);

  setenv("QBVAR_THREADS", "3", 1);
  setenv("QBVAR_OUTPUT_DIR", "/tmp/elsewhere", 1);
  defaults.apply_environment();
  CHECK(defaults.threads == 3);
  CHECK(defaults.output_dir == "/tmp/elsewhere");
  unsetenv("QBVAR_THREADS");
  unsetenv("QBVAR_OUTPUT_DIR");
}

TEST_CASE("end-to-end run writes a complete, reproducible bundle") {
  const auto dir = testing::scratch_dir("cli_run");
  auto j = small_setup(dir);
  auto config = ExperimentConfig::from_json(j, dir);
  const auto summary = run_recursive(config);
  CHECK(summary.origins.size() == 6);
  CHECK(summary.failed_origins.empty());

  // every (model, origin) populated at every (h, q)
  std::size_t model_sets = 0;
  for (const auto& s : summary.forecasts) {
    if (s.model_id.rfind("comb_", 0) == 0) continue;
    ++model_sets;
    CHECK(s.values.rows() == 3);
    CHECK(s.values.cols() == 3);
    CHECK(s.values.allFinite());
  }
  CHECK(model_sets == 6 * 3);

  // manifest lists every file with its hash
  const auto manifest = json::parse(slurp(config.output_dir / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : manifest["files"]) {
    listed.insert(f["file"].get<std::string>());
    CHECK(f["sha256"] == sha256_file(config.output_dir / f["file"].get<std::string>()));
  }
  for (const auto& entry : fs::directory_iterator(config.output_dir)) {
    if (entry.path().filename() != "manifest.json") CHECK(listed.count(entry.path().filename().string()) == 1);
  }
  CHECK(manifest["config_sha256"] == sha256_hex(config.to_json().dump()));
  CHECK(manifest["version"] == kVersion);

  // self ratio and pipeline equality with the report
  bool saw_self = false;
  for (const auto& t : summary.ratios) {
    if (t.numerator == "rw" && t.benchmark == "rw" && t.window_label == "test") {
      saw_self = true;
      for (const auto& [k, c] : t.cells) {
        CHECK(c.defined);
        CHECK(c.ratio == 1.0);
        (void)k;
      }
    }
  }
  CHECK(saw_self);
  const auto on_disk = eval::read_ratio_csv(config.output_dir / "ratios.csv");
  REQUIRE(on_disk.size() == summary.ratios.size());
  for (std::size_t i = 0; i < on_disk.size(); ++i) {
    for (const auto& [k, c] : summary.ratios[i].cells) {
      CHECK(on_disk[i].cells.at(k).defined == c.defined);
      if (c.defined) CHECK(on_disk[i].cells.at(k).ratio == c.ratio);
    }
  }
  const std::string text = report(config.output_dir);
  CHECK(text.find("Gulf War") != std::string::npos);
  CHECK(text.find("n/a") != std::string::npos);
  CHECK(fs::exists(config.output_dir / "report.txt"));

  // rerun with the same seed: identical score and ratio tables
  const std::string scores = slurp(config.output_dir / "scores.csv");
  const std::string ratios = slurp(config.output_dir / "ratios.csv");
  config.output_dir = dir / "again";
  config.threads = 2;
  run_recursive(config);
  CHECK(slurp(dir / "again" / "scores.csv") == scores);
  CHECK(slurp(dir / "again" / "ratios.csv") == ratios);
}

TEST_CASE("report rejects an incomplete run directory") {
  const auto dir = testing::scratch_dir("cli_incomplete");
  CHECK_THROWS_AS(report(dir), IoError);
}

TEST_CASE("forecasts at an origin ignore later data") {
  const auto dir = testing::scratch_dir("cli_leak");
  auto config = ExperimentConfig::from_json(small_setup(dir), dir);
  const auto raw = data::read_panel_csv(config.data, config.tcodes);
  const YearMonth origin{2010, 3};
  auto perturbed = raw;
  for (std::size_t r = 0; r < perturbed.rows(); ++r) {
    if (perturbed.dates[r] > origin) {
      for (auto& col : perturbed.columns) col[r] *= 1.5 + 0.01 * static_cast<double>(r);
    }
  }
  const auto a = forecast_at_origin(raw, config, origin);
  const auto b = forecast_at_origin(perturbed, config, origin);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
}

#ifdef QBVAR_CLI_PATH
TEST_CASE("command-line driver") {
  const auto dir = testing::scratch_dir("cli_binary");
  auto j = small_setup(dir);
  j["evaluation_windows"] = {{{"label", "test"}, {"start", "2010-01"}, {"end", "2010-03"}}};
  std::ofstream(dir / "config.json") << j.dump(2);
  const std::string cli = QBVAR_CLI_PATH;
  const std::string cfg = (dir / "config.json").string();

  CHECK(std::system((cli + " ingest -c " + cfg + " -o " + (dir / "t.csv").string() + " > /dev/null").c_str()) == 0);
  CHECK(fs::exists(dir / "t.csv"));
  CHECK(std::system((cli + " run -c " + cfg + " -o " + (dir / "run").string() + " > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " report " + (dir / "run").string() + " > " + (dir / "r.txt").string()).c_str()) == 0);
  CHECK(slurp(dir / "r.txt").find("QS10") != std::string::npos);

  CHECK(std::system((cli + " estimate -c " + cfg + " --origin 2010-02 -m qbvar2 -q 0.5 -o " +
                     (dir / "d.bin").string() + " > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " forecast -c " + cfg + " --origin 2010-02 -o " + (dir / "f.csv").string() +
                     " > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " evaluate -c " + cfg + " -f " + (dir / "run" / "forecasts.csv").string() + " -o " +
                     (dir / "ev").string() + " > /dev/null").c_str()) == 0);
  CHECK(std::system((cli + " combine -c " + cfg + " -f " + (dir / "run" / "forecasts.csv").string() +
                     " --qbvar qbvar2 --benchmark bvar2 -s optimal -w 2 -o " + (dir / "cb").string() +
                     " > /dev/null").c_str()) == 0);

  // failures exit nonzero with a JSON summary on stderr
  const std::string err = (dir / "err.json").string();
  const int rc = std::system((cli + " report " + (dir / "nothing").string() + " 2> " + err).c_str());
  CHECK(rc != 0);
  const auto e = json::parse(slurp(err));
  CHECK(e["status"] == "error");
  CHECK(e["error"] == "io");
  CHECK(std::system((cli + " bogus 2> /dev/null").c_str()) != 0);
}
#endif
