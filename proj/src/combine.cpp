#include "qbvar/combine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "qbvar/error.hpp"

namespace qbvar::combine {

using forecast::QuantileForecastSet;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Fixed:
      return "fixed";
    case Strategy::Performance:
      return "performance";
    case Strategy::Optimal:
      return "optimal";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "fixed") return Strategy::Fixed;
  if (name == "performance") return Strategy::Performance;
  if (name == "optimal") return Strategy::Optimal;
  throw InvalidArgument("unknown combination strategy '" + name + "'");
}

namespace {

void check_aligned(const QuantileForecastSet& a, const QuantileForecastSet& b) {
  if (a.origin != b.origin || a.values.rows() != b.values.rows() || a.quantiles.size() != b.quantiles.size()) {
    throw InvalidArgument("combine: forecast sets are not aligned (" + a.model_id + " vs " + b.model_id + " at " +
                          a.origin.str() + ")");
  }
  for (std::size_t j = 0; j < a.quantiles.size(); ++j) {
    if (std::abs(a.quantiles[j] - b.quantiles[j]) > 1e-9) throw InvalidArgument("combine: quantile grids differ");
  }
}

}  // namespace

QuantileForecastSet combine_fixed(const QuantileForecastSet& qbvar, const QuantileForecastSet& benchmark,
                                  double lambda, std::string model_id) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("combination weight must lie in [0, 1]");
  check_aligned(qbvar, benchmark);
  QuantileForecastSet out{std::move(model_id), qbvar.origin, qbvar.quantiles, {}};
  if (lambda == 1.0) {
    out.values = qbvar.values;
  } else if (lambda == 0.0) {
    out.values = benchmark.values;
  } else {
    out.values = lambda * qbvar.values + (1.0 - lambda) * benchmark.values;
  }
  return out;
}

Weight performance_weight(std::span<const double> qbvar_losses, std::span<const double> benchmark_losses,
                          std::size_t window) {
  if (qbvar_losses.size() != benchmark_losses.size()) throw InvalidArgument("performance_weight: length mismatch");
  if (window == 0 || qbvar_losses.size() < window) return {0.5, true};
  const std::size_t from = qbvar_losses.size() - window;
  double qs_q = 0.0;
  double qs_b = 0.0;
  for (std::size_t j = from; j < qbvar_losses.size(); ++j) {
    qs_q += qbvar_losses[j];
    qs_b += benchmark_losses[j];
  }
  qs_q /= static_cast<double>(window);
  qs_b /= static_cast<double>(window);
  if (!std::isfinite(qs_q) || !std::isfinite(qs_b)) return {0.5, true};
  if (qs_q + qs_b == 0.0) return {0.5, false};
  return {1.0 - qs_q / (qs_b + qs_q), false};
}

double combined_loss(std::span<const double> a, std::span<const double> b, std::span<const double> y, double q,
                     double lambda) {
  if (a.size() != b.size() || a.size() != y.size()) throw InvalidArgument("combined_loss: length mismatch");
  if (a.empty()) throw InvalidArgument("combined_loss: empty window");
  double total = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    total += eval::pinball(y[j] - (lambda * a[j] + (1.0 - lambda) * b[j]), q);
  }
  return total / static_cast<double>(a.size());
}

Weight optimal_weight(std::span<const double> a, std::span<const double> b, std::span<const double> y, double q,
                      std::size_t window) {
  if (a.size() != b.size() || a.size() != y.size()) throw InvalidArgument("optimal_weight: length mismatch");
  if (window == 0 || a.size() < window) return {0.5, true};
  const std::size_t from = a.size() - window;
  a = a.subspan(from);
  b = b.subspan(from);
  y = y.subspan(from);

  std::vector<double> candidates{0.0, 1.0};
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    if (d == 0.0) continue;
    const double kink = (y[j] - b[j]) / d;
    if (kink > 0.0 && kink < 1.0) candidates.push_back(kink);
  }
  std::vector<double> values(candidates.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    values[c] = combined_loss(a, b, y, q, candidates[c]);
    best = std::min(best, values[c]);
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  double lo = 1.0;
  double hi = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (values[c] <= best + tol) {
      lo = std::min(lo, candidates[c]);
      hi = std::max(hi, candidates[c]);
    }
  }
  // convexity: every point of [lo, hi] is a minimizer
  return {std::clamp(0.5, lo, hi), false};
}

CombinationResult combine_recursive(std::span<const QuantileForecastSet> qbvar_sets,
                                    std::span<const QuantileForecastSet> benchmark_sets,
                                    const eval::Realizations& realized, Strategy strategy, std::size_t window,
                                    double fixed_lambda, std::string model_id) {
  std::map<int, const QuantileForecastSet*> bench_by_origin;
  for (const auto& s : benchmark_sets) bench_by_origin[s.origin.index()] = &s;
  std::vector<std::pair<const QuantileForecastSet*, const QuantileForecastSet*>> pairs;
  for (const auto& s : qbvar_sets) {
    auto it = bench_by_origin.find(s.origin.index());
    if (it == bench_by_origin.end()) {
      throw InvalidArgument("combine: benchmark has no forecast for origin " + s.origin.str());
    }
    check_aligned(s, *it->second);
    pairs.emplace_back(&s, it->second);
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return x.first->origin < y.first->origin; });

  CombinationResult result;
  result.strategy = strategy;
  result.window = window;
  for (const auto& [qs, bs] : pairs) {
    QuantileForecastSet out{model_id, qs->origin, qs->quantiles, Eigen::MatrixXd(qs->values.rows(), qs->values.cols())};
    for (int h = 1; h <= qs->horizons(); ++h) {
      for (std::size_t j = 0; j < qs->quantiles.size(); ++j) {
        const double q = qs->quantiles[j];
        const auto col = static_cast<Eigen::Index>(j);
        Weight w{fixed_lambda, false};
        if (strategy != Strategy::Fixed) {
          std::vector<double> fa, fb, yy;
          for (const auto& [hq, hb] : pairs) {
            if (hq->origin.plus_months(h) > qs->origin) break;
            if (hq->horizons() < h) continue;
            const auto y = realized.at(hq->origin.plus_months(h));
            if (!y) continue;
            fa.push_back(hq->values(h - 1, col));
            fb.push_back(hb->values(h - 1, col));
            yy.push_back(*y);
          }
          if (strategy == Strategy::Performance) {
            std::vector<double> la(fa.size()), lb(fb.size());
            for (std::size_t i = 0; i < yy.size(); ++i) {
              la[i] = eval::pinball(yy[i] - fa[i], q);
              lb[i] = eval::pinball(yy[i] - fb[i], q);
            }
            w = performance_weight(la, lb, window);
          } else {
            w = optimal_weight(fa, fb, yy, q, window);
          }
        }
        out.values(h - 1, col) = w.lambda * qs->values(h - 1, col) + (1.0 - w.lambda) * bs->values(h - 1, col);
        result.weights.push_back(WeightRecord{qs->origin, q, h, w.lambda, w.warm_up});
      }
    }
    result.combined.push_back(std::move(out));
  }
  return result;
}

std::vector<LambdaCurvePoint> lambda_curve(std::span<const QuantileForecastSet> qbvar_sets,
                                           std::span<const QuantileForecastSet> benchmark_sets,
                                           const eval::Realizations& realized, double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw InvalidArgument("lambda_curve: grid step must lie in (0, 1]");
  std::map<int, const QuantileForecastSet*> bench_by_origin;
  for (const auto& s : benchmark_sets) bench_by_origin[s.origin.index()] = &s;
  if (qbvar_sets.empty()) return {};

  std::vector<LambdaCurvePoint> out;
  const auto& proto = qbvar_sets.front();
  const int steps = static_cast<int>(std::lround(1.0 / grid_step));
  for (std::size_t j = 0; j < proto.quantiles.size(); ++j) {
    const double q = proto.quantiles[j];
    for (int h = 1; h <= proto.horizons(); ++h) {
      std::vector<double> fa, fb, yy;
      for (const auto& s : qbvar_sets) {
        auto it = bench_by_origin.find(s.origin.index());
        if (it == bench_by_origin.end()) throw InvalidArgument("lambda_curve: benchmark missing origin " + s.origin.str());
        check_aligned(s, *it->second);
        const auto y = realized.at(s.origin.plus_months(h));
        if (!y) continue;
        fa.push_back(s.values(h - 1, static_cast<Eigen::Index>(j)));
        fb.push_back(it->second->values(h - 1, static_cast<Eigen::Index>(j)));
        yy.push_back(*y);
      }
      if (yy.empty()) continue;
      const double bench = combined_loss(fa, fb, yy, q, 0.0);
      auto ratio = [&](double lam) {
        return bench > 0.0 ? combined_loss(fa, fb, yy, q, lam) / bench : std::numeric_limits<double>::quiet_NaN();
      };
      for (int g = 0; g <= steps; ++g) {
        const double lam = std::min(1.0, g * grid_step);
        out.push_back({q, h, lam, ratio(lam), false});
      }
      const double best = optimal_weight(fa, fb, yy, q, yy.size()).lambda;
      out.push_back({q, h, best, ratio(best), true});
    }
  }
  return out;
}

void write_weights_csv(const CombinationResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "strategy,window,origin,quantile,horizon,lambda,warm_up\n";
  for (const auto& w : result.weights) {
    out << to_string(result.strategy) << ',' << result.window << ',' << w.origin.str() << ','
        << forecast::format_double(w.quantile) << ',' << w.horizon << ',' << forecast::format_double(w.lambda) << ','
        << (w.warm_up ? 1 : 0) << '\n';
  }
}

void write_lambda_curve_csv(std::span<const LambdaCurvePoint> points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "quantile,horizon,lambda,qs_ratio,optimal\n";
  for (const auto& p : points) {
    out << forecast::format_double(p.quantile) << ',' << p.horizon << ',' << forecast::format_double(p.lambda) << ','
        << (std::isnan(p.ratio) ? std::string("n/a") : forecast::format_double(p.ratio)) << ','
        << (p.optimal ? 1 : 0) << '\n';
  }
}

}  // namespace qbvar::combine
