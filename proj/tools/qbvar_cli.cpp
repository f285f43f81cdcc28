#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qbvar/bvar.hpp"
#include "qbvar/combine.hpp"
#include "qbvar/draws_io.hpp"
#include "qbvar/error.hpp"
#include "qbvar/eval.hpp"
#include "qbvar/experiment.hpp"
#include "qbvar/forecast.hpp"

namespace fs = std::filesystem;
using namespace qbvar;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInvalid = 2, kIo = 3, kNumeric = 4 };

int fail(ExitCode code, const std::string& kind, const std::string& command, const std::string& message) {
  json err{{"status", "error"}, {"error", kind}, {"command", command}, {"message", message}};
  std::cerr << err.dump() << std::endl;
  return code;
}

experiment::ExperimentConfig load_config(const fs::path& path) {
  auto config = experiment::ExperimentConfig::load(path);
  config.apply_environment();
  return config;
}

const experiment::ModelSpec& find_model(const experiment::ExperimentConfig& config, const std::string& id) {
  for (const auto& m : config.models) {
    if (m.id == id) return m;
  }
  throw InvalidArgument("model '" + id + "' is not defined in the config");
}

// Transformed estimation sample ending at `origin`, restricted to the VAR variables.
Eigen::MatrixXd sample_at(const experiment::ExperimentConfig& config, const YearMonth& origin) {
  const auto raw = data::read_panel_csv(config.data, config.tcodes);
  const auto panel = experiment::prepare_panel(raw.truncated(origin), config);
  if (panel.rows() == 0 || panel.dates.back() != origin) throw InvalidArgument("no data at origin " + origin.str());
  return panel.complete_matrix(config.variables);
}

std::vector<forecast::QuantileForecastSet> read_all(const std::vector<std::string>& files) {
  std::vector<forecast::QuantileForecastSet> out;
  for (const auto& f : files) {
    auto sets = forecast::read_forecasts(f);
    out.insert(out.end(), std::make_move_iterator(sets.begin()), std::make_move_iterator(sets.end()));
  }
  return out;
}

std::vector<forecast::QuantileForecastSet> of_model(const std::vector<forecast::QuantileForecastSet>& sets,
                                                    const std::string& id) {
  std::vector<forecast::QuantileForecastSet> out;
  for (const auto& s : sets) {
    if (s.model_id == id) out.push_back(s);
  }
  if (out.empty()) throw InvalidArgument("no forecasts for model '" + id + "'");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.origin < b.origin; });
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile Bayesian VAR forecasting toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(experiment::kVersion));

  std::string config_path;
  std::string out_path;
  std::string origin_str;
  std::string model_id;
  double quantile = 0.5;
  std::vector<std::string> draws_files;
  std::vector<std::string> forecast_files;
  std::string strategy = "fixed";
  std::size_t window = 50;
  double lambda = 0.5;
  std::string qbvar_id;
  std::string bench_id;
  int threads = 0;
  std::string output_dir;
  std::string run_dir;

  auto* ingest = app.add_subcommand("ingest", "Read, deflate, splice and transform the data panel");
  ingest->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  ingest->add_option("-o,--out", out_path, "Write the transformed panel to this CSV");

  auto* estimate = app.add_subcommand("estimate", "Run one Gibbs chain at one origin and store the draws");
  estimate->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  estimate->add_option("--origin", origin_str, "Forecast origin (YYYY-MM)")->required();
  estimate->add_option("-m,--model", model_id, "Model id from the config")->required();
  estimate->add_option("-q,--quantile", quantile, "Quantile level (QBVAR only)");
  estimate->add_option("-o,--out", out_path, "Draw file")->required();

  auto* forecast_cmd = app.add_subcommand("forecast", "Quantile forecasts at one origin");
  forecast_cmd->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  forecast_cmd->add_option("--origin", origin_str, "Forecast origin (YYYY-MM)")->required();
  forecast_cmd->add_option("-d,--draws", draws_files, "Stored draws of one model (one file per quantile for QBVAR)")
      ->check(CLI::ExistingFile);
  forecast_cmd->add_option("-m,--model", model_id, "Model id used with --draws");
  forecast_cmd->add_option("-o,--out", out_path, "Forecast CSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Quantile scores and ratios for forecast files");
  evaluate->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  evaluate->add_option("-f,--forecasts", forecast_files, "Forecast CSV files")->required()->check(CLI::ExistingFile);
  evaluate->add_option("-o,--out", out_path, "Output directory")->required();

  auto* combine_cmd = app.add_subcommand("combine", "Combine QBVAR and benchmark quantile forecasts");
  combine_cmd->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  combine_cmd->add_option("-f,--forecasts", forecast_files)->required()->check(CLI::ExistingFile);
  combine_cmd->add_option("--qbvar", qbvar_id, "QBVAR model id")->required();
  combine_cmd->add_option("--benchmark", bench_id, "Benchmark model id")->required();
  combine_cmd->add_option("-s,--strategy", strategy, "fixed | performance | optimal");
  combine_cmd->add_option("-w,--window", window, "Trailing window S");
  combine_cmd->add_option("-l,--lambda", lambda, "Weight for the fixed strategy");
  combine_cmd->add_option("-o,--out", out_path, "Output directory")->required();

  auto* run = app.add_subcommand("run", "End-to-end recursive out-of-sample experiment");
  run->add_option("-c,--config", config_path)->required()->check(CLI::ExistingFile);
  run->add_option("-t,--threads", threads, "Worker threads (overrides config and QBVAR_THREADS)");
  run->add_option("-o,--output-dir", output_dir, "Output directory (overrides config and QBVAR_OUTPUT_DIR)");

  auto* report_cmd = app.add_subcommand("report", "Render ratio tables of a completed run");
  report_cmd->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(kInvalid, "usage", app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name(),
                e.what());
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    json result{{"status", "ok"}, {"command", command}};
    if (*ingest) {
      const auto config = load_config(config_path);
      const auto raw = data::read_panel_csv(config.data, config.tcodes);
      const auto panel = experiment::prepare_panel(raw, config);
      panel.complete_matrix(config.variables);
      if (!out_path.empty()) data::write_panel_csv(panel, out_path);
      result["rows"] = panel.rows();
      result["first"] = panel.dates.front().str();
      result["last"] = panel.dates.back().str();
      result["series"] = panel.names;
    } else if (*estimate) {
      const auto config = load_config(config_path);
      const auto origin = YearMonth::parse(origin_str);
      const auto& spec = find_model(config, model_id);
      const auto y = sample_at(config, origin);
      const auto design = data::build_lag_design(y, spec.lags, config.variables);
      model::PosteriorDrawSet draws;
      if (spec.kind == experiment::ModelKind::Qbvar) {
        model::QbvarConfig qc{quantile, spec.lags, config.factors, config.prior, config.mcmc, config.seed};
        draws = model::run_chain(design, qc);
      } else if (spec.kind == experiment::ModelKind::Bvar) {
        draws = bvar::run_bvar_chain(design, {spec.lags, config.factors, config.prior, config.mcmc, config.seed});
      } else {
        throw InvalidArgument("the random walk has no parameters to estimate");
      }
      model::write_draws(draws, origin, out_path);
      result["draws"] = draws.size();
      result["file"] = out_path;
    } else if (*forecast_cmd) {
      const auto config = load_config(config_path);
      const auto origin = YearMonth::parse(origin_str);
      std::vector<forecast::QuantileForecastSet> sets;
      if (draws_files.empty()) {
        sets = experiment::forecast_at_origin(data::read_panel_csv(config.data, config.tcodes), config, origin,
                                              config.threads);
      } else {
        if (model_id.empty()) throw InvalidArgument("--model is required with --draws");
        const auto y = sample_at(config, origin);
        const auto target = static_cast<Eigen::Index>(
            std::find(config.variables.begin(), config.variables.end(), config.target) - config.variables.begin());
        std::map<double, forecast::PathSet> by_q;
        Rng rng(Rng::derive_seed(config.seed, {static_cast<std::uint64_t>(origin.index())}));
        bool gaussian = false;
        for (const auto& f : draws_files) {
          auto stored = model::read_draws(f);
          if (stored.origin != origin) throw InvalidArgument(f + " was estimated at " + stored.origin.str());
          gaussian = stored.draws.likelihood == model::Likelihood::Gaussian;
          by_q[stored.draws.quantile] = forecast::simulate_paths(stored.draws, y, config.horizon, rng);
        }
        if (gaussian) {
          if (by_q.size() != 1) throw InvalidArgument("a Gaussian model takes exactly one draw file");
          sets.push_back(forecast::predictive_quantile_forecast(model_id, origin, config.quantiles,
                                                                by_q.begin()->second, target));
        } else {
          std::vector<const forecast::PathSet*> ordered;
          for (double q : config.quantiles) {
            auto it = by_q.find(q);
            if (it == by_q.end()) throw InvalidArgument("no draw file for quantile " + forecast::format_double(q));
            ordered.push_back(&it->second);
          }
          sets.push_back(forecast::median_forecast(model_id, origin, config.quantiles, ordered, target));
        }
      }
      forecast::write_forecasts(sets, out_path);
      result["sets"] = sets.size();
      result["file"] = out_path;
    } else if (*evaluate) {
      const auto config = load_config(config_path);
      const auto realized = experiment::load_realizations(config);
      const auto sets = read_all(forecast_files);
      std::vector<eval::ScoreTable> tables;
      for (const auto& w : config.evaluation_windows) {
        std::vector<forecast::QuantileForecastSet> in_window;
        for (const auto& s : sets) {
          if (w.contains(s.origin)) in_window.push_back(s);
        }
        if (in_window.empty()) continue;
        auto table = eval::average_qs(in_window, realized);
        table.window_label = w.label;
        tables.push_back(std::move(table));
      }
      for (const auto& w : config.event_windows) tables.push_back(eval::average_qs(sets, realized, w, config.alignment));
      std::vector<eval::RatioTable> ratios;
      std::string text;
      for (const auto& t : tables) {
        const auto models = t.models();
        for (const auto& b : config.benchmarks) {
          if (std::find(models.begin(), models.end(), b) == models.end()) continue;
          std::vector<eval::RatioTable> group;
          for (const auto& m : models) group.push_back(eval::qs_ratio(t, m, b));
          text += eval::render_ratio_tables(group) + "\n";
          ratios.insert(ratios.end(), group.begin(), group.end());
        }
      }
      fs::create_directories(out_path);
      for (std::size_t i = 0; i < tables.size(); ++i) {
        eval::write_score_csv(tables[i], fs::path(out_path) / ("scores_" + std::to_string(i + 1) + ".csv"));
      }
      eval::write_ratio_csv(ratios, fs::path(out_path) / "ratios.csv");
      std::ofstream(fs::path(out_path) / "ratios.txt") << text;
      result["tables"] = tables.size();
      result["ratios"] = ratios.size();
    } else if (*combine_cmd) {
      const auto config = load_config(config_path);
      const auto realized = experiment::load_realizations(config);
      const auto sets = read_all(forecast_files);
      const auto strat = combine::strategy_from_string(strategy);
      const auto q_sets = of_model(sets, qbvar_id);
      const auto b_sets = of_model(sets, bench_id);
      const auto res = combine::combine_recursive(q_sets, b_sets, realized, strat, window, lambda,
                                                  "comb_" + combine::to_string(strat));
      fs::create_directories(out_path);
      forecast::write_forecasts(res.combined, fs::path(out_path) / "combinations.csv");
      combine::write_weights_csv(res, fs::path(out_path) / ("weights_" + combine::to_string(strat) + ".csv"));
      combine::write_lambda_curve_csv(combine::lambda_curve(q_sets, b_sets, realized),
                                      fs::path(out_path) / "lambda_curve.csv");
      result["origins"] = res.combined.size();
    } else if (*run) {
      auto config = load_config(config_path);
      if (threads > 0) config.threads = threads;
      if (!output_dir.empty()) config.output_dir = output_dir;
      const auto summary = experiment::run_recursive(config);
      result["origins"] = summary.origins.size();
      result["failed_origins"] = summary.failed_origins;
      result["output_dir"] = config.output_dir.string();
    } else if (*report_cmd) {
      std::cout << experiment::report(run_dir);
      return kOk;
    }
    std::cout << result.dump() << std::endl;
    return kOk;
  } catch (const InvalidArgument& e) {
    return fail(kInvalid, "invalid_argument", command, e.what());
  } catch (const IoError& e) {
    return fail(kIo, "io", command, e.what());
  } catch (const NumericError& e) {
    return fail(kNumeric, "numeric", command, e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "internal", command, e.what());
  }
}
