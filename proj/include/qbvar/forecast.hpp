#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbvar/date.hpp"
#include "qbvar/model.hpp"
#include "qbvar/rng.hpp"

/// Iterated multi-step forecasts from posterior draws, and the no-change
/// random-walk benchmark.
namespace qbvar::forecast {

/// Simulated future paths, one H x n matrix per posterior draw.
struct PathSet {
  std::vector<Eigen::MatrixXd> paths;
  std::size_t aborted = 0;  // draws dropped for producing non-finite values

  int horizon() const { return paths.empty() ? 0 : static_cast<int>(paths.front().rows()); }
  /// Values of variable `var` at step h (1-based) across draws.
  std::vector<double> at(int h, Eigen::Index var) const;
};

/// For every draw: y_{t+j} = Phi x_{t+j} + Lambda f + sigma^{1/2} u with
/// f ~ N(0, I_r), u ~ N(0, I_n), so shocks are N(0, Lambda Lambda' + Sigma).
/// `history` holds at least p rows ending with the origin observation y_t.
/// Draws yielding non-finite values are dropped; more than 1% dropped throws
/// NumericError.
PathSet simulate_paths(const model::PosteriorDrawSet& draws, const Eigen::MatrixXd& history, int horizon, Rng& rng);

/// Quantile forecasts for one model and origin: values(h-1, j) is the
/// forecast for horizon h at quantile level quantiles[j].
struct QuantileForecastSet {
  std::string model_id;
  YearMonth origin;
  std::vector<double> quantiles;
  Eigen::MatrixXd values;

  int horizons() const { return static_cast<int>(values.rows()); }
  std::size_t quantile_index(double q) const;
  double value(int h, double q) const { return values(h - 1, static_cast<Eigen::Index>(quantile_index(q))); }
  /// Throws InvalidArgument if any cell is non-finite or shapes disagree.
  void validate() const;
};

/// Linear-interpolation (type 7) sample quantile.
double empirical_quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

/// QBVAR rule: the level-q forecast is the median across draws of the
/// level-q model's simulated values. `paths_by_quantile[j]` was simulated
/// from the model estimated at `quantiles[j]`.
QuantileForecastSet median_forecast(std::string model_id, const YearMonth& origin, std::span<const double> quantiles,
                                    std::span<const PathSet* const> paths_by_quantile, Eigen::Index target);

/// Predictive-distribution rule (BVAR): empirical q-quantile across draws.
QuantileForecastSet predictive_quantile_forecast(std::string model_id, const YearMonth& origin,
                                                 std::span<const double> quantiles, const PathSet& paths,
                                                 Eigen::Index target);

/// No-change forecast for a growth-rate target: zero at every cell.
QuantileForecastSet random_walk_forecast(std::string model_id, const YearMonth& origin, int horizon,
                                         std::span<const double> quantiles);

/// Rows "model_id,origin,horizon,quantile,value".
void write_forecasts(std::span<const QuantileForecastSet> sets, const std::filesystem::path& path);
std::vector<QuantileForecastSet> read_forecasts(const std::filesystem::path& path);

/// Shortest round-trip decimal representation used by every text output.
std::string format_double(double v);

}  // namespace qbvar::forecast
