#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qbvar/combine.hpp"
#include "qbvar/data.hpp"
#include "qbvar/eval.hpp"
#include "qbvar/forecast.hpp"
#include "qbvar/model.hpp"

/// Recursive out-of-sample experiments: expanding-window re-estimation at
/// every origin, scoring, combination and on-disk reporting.
namespace qbvar::experiment {

enum class ModelKind { Qbvar, Bvar, RandomWalk };

struct ModelSpec {
  std::string id;
  ModelKind kind = ModelKind::Qbvar;
  int lags = 4;
};

struct CombinationSpec {
  combine::Strategy strategy = combine::Strategy::Fixed;
  std::size_t window = 0;  // S for performance / optimal
  double lambda = 0.5;     // fixed strategy only
};

/// Real-price construction applied to raw levels before transformation.
struct DeflateSpec {
  std::string cpi;
  std::vector<std::string> series;
};

struct SpliceSpec {
  std::string target;
  std::string donor;
};

struct ExperimentConfig {
  std::filesystem::path data;
  std::map<std::string, data::TransformCode> tcodes;
  std::optional<DeflateSpec> deflate;
  std::vector<SpliceSpec> splices;
  std::string target;
  std::vector<std::string> variables;  // VAR system; contains the target
  std::vector<double> quantiles{0.1, 0.5, 0.9};
  int horizon = 12;
  int factors = 1;
  model::McmcSchedule mcmc;
  model::Priors prior;
  std::vector<ModelSpec> models;
  std::vector<eval::EventWindow> evaluation_windows;
  std::vector<eval::EventWindow> event_windows;
  eval::Alignment alignment = eval::Alignment::RealizationDate;
  std::vector<std::string> benchmarks;
  std::vector<CombinationSpec> combinations;
  std::string combine_qbvar;
  std::string combine_benchmark;
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path output_dir = "qbvar_run";

  /// Relative paths in the JSON are resolved against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
  /// QBVAR_THREADS and QBVAR_OUTPUT_DIR override the file settings.
  void apply_environment();
};

/// Raw panel to transformed panel: deflation, splicing, tcodes.
data::TimeSeriesPanel prepare_panel(const data::TimeSeriesPanel& raw, const ExperimentConfig& config);

/// Transformed target series of the full data file, for scoring.
eval::Realizations load_realizations(const ExperimentConfig& config);

/// Forecast origins: every month in each evaluation window that precedes the
/// last observation, in order, without duplicates.
std::vector<YearMonth> forecast_origins(const ExperimentConfig& config, const YearMonth& last_observation);

/// Forecast sets produced at one origin using only raw data dated <= origin.
std::vector<forecast::QuantileForecastSet> forecast_at_origin(const data::TimeSeriesPanel& raw,
                                                              const ExperimentConfig& config, const YearMonth& origin,
                                                              int threads = 1);

struct RunSummary {
  std::vector<YearMonth> origins;
  std::vector<std::string> failed_origins;  // "YYYY-MM: message"
  std::vector<forecast::QuantileForecastSet> forecasts;  // models and combinations
  std::vector<eval::ScoreTable> scores;
  std::vector<eval::RatioTable> ratios;
  std::vector<std::filesystem::path> files;
};

/// Full experiment; writes forecasts, score and ratio tables, combination
/// weights, lambda curves, diagnostics and a manifest under output_dir.
/// Throws if more than 1% of origins fail.
RunSummary run_recursive(const ExperimentConfig& config);

/// Renders ratio tables for every window and benchmark of a completed run,
/// writes report.txt next to them and returns the text.
std::string report(const std::filesystem::path& run_dir);

/// Hex SHA-256 of a file / of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

inline constexpr const char* kVersion = "qbvar-0.1.0";

}  // namespace qbvar::experiment
