#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qbvar/date.hpp"

/// Ingestion, transformation codes, real prices, lag designs and rolling
/// diagnostics. Everything here is a pure function of its inputs.
namespace qbvar::data {

/// Per-series stationarity transformation.
enum class TransformCode : int {
  FirstDifference = 1,
  None = 2,
  LogDifference = 5,
};

TransformCode transform_code_from_int(int code);

/// Missing-value marker used throughout panels and diagnostic outputs.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// Code 1: x_t - x_{t-1}; code 5: log x_t - log x_{t-1} (both length L-1);
/// code 2: identity. Missing values propagate.
std::vector<double> apply_transform(std::span<const double> levels, TransformCode code);

/// Real series in final-period currency: nominal_t * cpi_last / cpi_t.
std::vector<double> deflate(std::span<const double> nominal, std::span<const double> cpi);

/// Extends `target` backwards over its leading missing values by cumulating
/// the log-differences of `donor` (e.g. Brent backcast with RAC growth).
std::vector<double> splice_by_growth(std::span<const double> target, std::span<const double> donor);

/// Sample skewness m3 / m2^{3/2} of each trailing window (moments about the
/// window mean). Output element i covers x[i .. i+window-1]; windows with zero
/// variance or missing values yield kMissing.
std::vector<double> rolling_skewness(std::span<const double> x, std::size_t window);

/// Dated monthly panel. Columns may start with missing values but must be
/// complete afterwards.
struct TimeSeriesPanel {
  std::vector<YearMonth> dates;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<TransformCode> tcodes;

  std::size_t rows() const { return dates.size(); }
  std::size_t cols() const { return names.size(); }
  std::size_t column_index(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const { return columns[column_index(name)]; }

  /// Throws InvalidArgument on gaps, non-monotone dates, ragged columns or
  /// interior missing values.
  void validate() const;

  /// Rows dated on or before `last`.
  TimeSeriesPanel truncated(const YearMonth& last) const;

  /// Selected columns restricted to the rows where all of them are present.
  /// The first kept date is written to `first_date` when non-null.
  Eigen::MatrixXd complete_matrix(std::span<const std::string> selection, YearMonth* first_date = nullptr) const;
};

/// Series name -> tcode sidecar, stored as a JSON object.
std::map<std::string, TransformCode> read_tcodes(const std::filesystem::path& path);
void write_tcodes(const std::map<std::string, TransformCode>& tcodes, const std::filesystem::path& path);

/// Delimited file: header row "date,<name>,...", first column YYYY-MM.
/// Empty, NA, NaN and "." cells are missing. Columns absent from `tcodes`
/// default to TransformCode::None.
TimeSeriesPanel read_panel_csv(const std::filesystem::path& path,
                               const std::map<std::string, TransformCode>& tcodes = {}, char delimiter = ',');
void write_panel_csv(const TimeSeriesPanel& panel, const std::filesystem::path& path, char delimiter = ',');

/// Applies each column's tcode and drops the first row panel-wide so every
/// column shares one start date. Output tcodes are all None.
TimeSeriesPanel transform_panel(const TimeSeriesPanel& raw);

/// Regression design for a VAR(p) with intercept.
struct LagDesign {
  Eigen::MatrixXd y;  // T x n
  Eigen::MatrixXd x;  // T x (n p + 1); row t = (1, y_{t-1}', ..., y_{t-p}')
  int lags = 1;
  std::vector<std::string> names;

  Eigen::Index observations() const { return y.rows(); }
  Eigen::Index variables() const { return y.cols(); }
  Eigen::Index regressors() const { return x.cols(); }
};

LagDesign build_lag_design(const Eigen::MatrixXd& y_full, int lags, std::vector<std::string> names = {});

}  // namespace qbvar::data
