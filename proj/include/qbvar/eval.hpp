#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qbvar/date.hpp"
#include "qbvar/forecast.hpp"

/// Quantile scoring, benchmark-relative ratios and event-window conditioning.
namespace qbvar::eval {

/// Check function rho_q(u) = u (q - 1{u < 0}).
double pinball(double u, double q);

struct EventWindow {
  std::string label;
  YearMonth start;
  YearMonth end;

  void validate() const;
  bool contains(const YearMonth& d) const { return start <= d && d <= end; }
};

/// Calendar-year spans of the six major oil price episodes.
std::vector<EventWindow> default_event_windows();

/// Which date decides event-window membership of a scored pair.
enum class Alignment { RealizationDate, OriginDate };

/// Observed target values starting at `first`, one per month.
struct Realizations {
  YearMonth first;
  std::vector<double> values;

  YearMonth last() const { return first.plus_months(static_cast<int>(values.size()) - 1); }
  /// Empty when `date` is after the last observation. Throws InvalidArgument
  /// for dates before the series or missing interior values.
  std::optional<double> at(const YearMonth& date) const;
};

struct CellKey {
  std::string model;
  double quantile;
  int horizon;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellScore {
  double mean = 0.0;       // average pinball loss, meaningless when count == 0
  std::size_t count = 0;   // number of scored origins P
};

struct ScoreTable {
  std::string window_label;
  std::map<CellKey, CellScore> cells;

  const CellScore& at(const std::string& model, double q, int h) const;
  std::vector<std::string> models() const;
  std::vector<double> quantiles() const;
  int max_horizon() const;
};

/// Mean pinball loss per (model, q, h). A forecast from origin t at horizon h
/// is scored against the realization dated t+h; pairs whose realization is
/// not yet observed are skipped. With a window, only pairs whose alignment
/// date falls inside it count.
ScoreTable average_qs(std::span<const forecast::QuantileForecastSet> forecasts, const Realizations& realized,
                      const std::optional<EventWindow>& window = std::nullopt,
                      Alignment alignment = Alignment::RealizationDate);

struct RatioCell {
  double ratio = 0.0;
  bool defined = false;  // false when either side has no scored pairs or the benchmark scores 0
};

struct RatioTable {
  std::string window_label;
  std::string numerator;
  std::string benchmark;
  std::map<std::pair<double, int>, RatioCell> cells;  // (q, h)
};

/// Cellwise QS(numerator) / QS(benchmark). Throws InvalidArgument if the two
/// models do not cover the same cells with the same counts.
RatioTable qs_ratio(const ScoreTable& table, const std::string& numerator, const std::string& benchmark);

/// Share of (origin, h) pairs whose quantile forecasts are not non-decreasing
/// in q.
double crossing_frequency(std::span<const forecast::QuantileForecastSet> forecasts);

void write_score_csv(const ScoreTable& table, const std::filesystem::path& path);
void write_ratio_csv(std::span<const RatioTable> tables, const std::filesystem::path& path);
std::vector<RatioTable> read_ratio_csv(const std::filesystem::path& path);

/// Plain-text table: one row per horizon, one QS10/QS50/QS90 column triplet
/// per numerator model. Ratios below 1.00 carry a '*' flag; undefined cells
/// print n/a. All tables must share a benchmark.
std::string render_ratio_tables(std::span<const RatioTable> tables);

}  // namespace qbvar::eval
