#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qbvar/eval.hpp"
#include "qbvar/forecast.hpp"

/// Two-model convex forecast combinations: fixed weight, trailing
/// performance ratio, and trailing-window optimal weight.
namespace qbvar::combine {

enum class Strategy { Fixed, Performance, Optimal };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// lambda * qbvar + (1 - lambda) * benchmark, cell by cell.
forecast::QuantileForecastSet combine_fixed(const forecast::QuantileForecastSet& qbvar,
                                            const forecast::QuantileForecastSet& benchmark, double lambda,
                                            std::string model_id = "comb");

struct Weight {
  double lambda = 0.5;
  bool warm_up = false;  // fewer than S scored observations: equal-weight fallback
};

/// lambda = 1 - QS_qbvar / (QS_bench + QS_qbvar) over the last `window`
/// losses of each model.
Weight performance_weight(std::span<const double> qbvar_losses, std::span<const double> benchmark_losses,
                          std::size_t window);

/// Average pinball loss of lambda * a + (1 - lambda) * b against y.
double combined_loss(std::span<const double> qbvar_fc, std::span<const double> benchmark_fc,
                     std::span<const double> realized, double q, double lambda);

/// argmin over [0, 1] of combined_loss on the last `window` observations.
/// The objective is convex and piecewise linear, so it is minimized exactly
/// over its breakpoints; among tied minimizers the one closest to 0.5 wins.
Weight optimal_weight(std::span<const double> qbvar_fc, std::span<const double> benchmark_fc,
                      std::span<const double> realized, double q, std::size_t window);

struct WeightRecord {
  YearMonth origin;
  double quantile;
  int horizon;
  double lambda;
  bool warm_up;
};

struct CombinationResult {
  Strategy strategy = Strategy::Fixed;
  std::size_t window = 0;
  std::vector<forecast::QuantileForecastSet> combined;
  std::vector<WeightRecord> weights;
};

/// Runs a strategy over a sequence of origins. Sets are matched by origin.
/// The history for (t, q, h) is the most recent `window` origins j with
/// j + h <= t, i.e. only realizations observable at t.
CombinationResult combine_recursive(std::span<const forecast::QuantileForecastSet> qbvar_sets,
                                    std::span<const forecast::QuantileForecastSet> benchmark_sets,
                                    const eval::Realizations& realized, Strategy strategy, std::size_t window,
                                    double fixed_lambda = 0.5, std::string model_id = "comb");

struct LambdaCurvePoint {
  double quantile;
  int horizon;
  double lambda;
  double ratio;  // QS(fixed-lambda combination) / QS(benchmark)
  bool optimal;  // the in-sample minimizer for this (q, h)
};

/// Fixed-weight QS ratio curves on a lambda grid, plus the in-sample optimal
/// lambda per (q, h).
std::vector<LambdaCurvePoint> lambda_curve(std::span<const forecast::QuantileForecastSet> qbvar_sets,
                                           std::span<const forecast::QuantileForecastSet> benchmark_sets,
                                           const eval::Realizations& realized, double grid_step = 0.05);

void write_weights_csv(const CombinationResult& result, const std::filesystem::path& path);
void write_lambda_curve_csv(std::span<const LambdaCurvePoint> points, const std::filesystem::path& path);

}  // namespace qbvar::combine
