#include "qbvar/forecast.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qbvar/error.hpp"

namespace qbvar::forecast {

std::vector<double> PathSet::at(int h, Eigen::Index var) const {
  std::vector<double> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(p(h - 1, var));
  return out;
}

PathSet simulate_paths(const model::PosteriorDrawSet& draws, const Eigen::MatrixXd& history, int horizon, Rng& rng) {
  if (draws.draws.empty()) throw InvalidArgument("simulate_paths: no posterior draws");
  if (horizon < 1) throw InvalidArgument("simulate_paths: horizon must be at least 1");
  const int p = draws.lags;
  const Eigen::Index n = draws.variables();
  if (history.rows() < p || history.cols() != n) {
    throw InvalidArgument("simulate_paths: history must hold at least p rows of every variable");
  }
  if (!history.allFinite()) throw InvalidArgument("simulate_paths: history contains non-finite values");

  PathSet out;
  out.paths.reserve(draws.size());
  const Eigen::Index k = n * p + 1;
  Eigen::VectorXd x(k);
  Eigen::VectorXd u(n);

  for (const auto& d : draws.draws) {
    const Eigen::Index r = d.lambda.cols();
    const Eigen::VectorXd sd = d.sigma.cwiseSqrt();
    Eigen::VectorXd f(r);
    // lag buffer: row 0 is the most recent observation
    Eigen::MatrixXd lagged = history.bottomRows(p).colwise().reverse();
    Eigen::MatrixXd path(horizon, n);
    bool finite = true;
    for (int j = 0; j < horizon; ++j) {
      x(0) = 1.0;
      for (int l = 0; l < p; ++l) x.segment(1 + l * n, n) = lagged.row(l).transpose();
      for (Eigen::Index m = 0; m < r; ++m) f(m) = rng.normal();
      for (Eigen::Index i = 0; i < n; ++i) u(i) = rng.normal();
      Eigen::VectorXd y = d.phi * x + d.lambda * f + sd.cwiseProduct(u);
      if (!y.allFinite()) {
        finite = false;
        break;
      }
      path.row(j) = y.transpose();
      for (int l = p - 1; l > 0; --l) lagged.row(l) = lagged.row(l - 1);
      lagged.row(0) = y.transpose();
    }
    if (finite) {
      out.paths.push_back(std::move(path));
    } else {
      ++out.aborted;
    }
  }
  if (static_cast<double>(out.aborted) > 0.01 * static_cast<double>(draws.size())) {
    throw NumericError("simulate_paths: " + std::to_string(out.aborted) + " of " + std::to_string(draws.size()) +
                       " draws produced non-finite forecasts");
  }
  return out;
}

std::size_t QuantileForecastSet::quantile_index(double q) const {
  for (std::size_t j = 0; j < quantiles.size(); ++j) {
    if (std::abs(quantiles[j] - q) < 1e-9) return j;
  }
  throw InvalidArgument("forecast set '" + model_id + "' has no quantile " + format_double(q));
}

void QuantileForecastSet::validate() const {
  if (values.cols() != static_cast<Eigen::Index>(quantiles.size()) || values.rows() < 1) {
    throw InvalidArgument("forecast set '" + model_id + "' has inconsistent shape");
  }
  if (!values.allFinite()) throw InvalidArgument("forecast set '" + model_id + "' contains non-finite values");
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("empirical_quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("empirical_quantile: level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return empirical_quantile(std::move(values), 0.5); }

QuantileForecastSet median_forecast(std::string model_id, const YearMonth& origin, std::span<const double> quantiles,
                                    std::span<const PathSet* const> paths_by_quantile, Eigen::Index target) {
  if (quantiles.size() != paths_by_quantile.size() || quantiles.empty()) {
    throw InvalidArgument("median_forecast: one path set per quantile required");
  }
  QuantileForecastSet out{std::move(model_id), origin, {quantiles.begin(), quantiles.end()}, {}};
  const int horizon = paths_by_quantile.front()->horizon();
  out.values.resize(horizon, static_cast<Eigen::Index>(quantiles.size()));
  for (std::size_t j = 0; j < quantiles.size(); ++j) {
    const PathSet& ps = *paths_by_quantile[j];
    if (ps.paths.empty()) throw InvalidArgument("median_forecast: empty path set");
    if (ps.horizon() != horizon) throw InvalidArgument("median_forecast: horizons differ across quantiles");
    for (int h = 1; h <= horizon; ++h) out.values(h - 1, static_cast<Eigen::Index>(j)) = median(ps.at(h, target));
  }
  return out;
}

QuantileForecastSet predictive_quantile_forecast(std::string model_id, const YearMonth& origin,
                                                 std::span<const double> quantiles, const PathSet& paths,
                                                 Eigen::Index target) {
  if (paths.paths.empty()) throw InvalidArgument("predictive_quantile_forecast: empty path set");
  QuantileForecastSet out{std::move(model_id), origin, {quantiles.begin(), quantiles.end()}, {}};
  out.values.resize(paths.horizon(), static_cast<Eigen::Index>(quantiles.size()));
  for (int h = 1; h <= paths.horizon(); ++h) {
    auto sample = paths.at(h, target);
    std::sort(sample.begin(), sample.end());
    for (std::size_t j = 0; j < quantiles.size(); ++j) {
      out.values(h - 1, static_cast<Eigen::Index>(j)) = empirical_quantile(sample, quantiles[j]);
    }
  }
  return out;
}

QuantileForecastSet random_walk_forecast(std::string model_id, const YearMonth& origin, int horizon,
                                         std::span<const double> quantiles) {
  if (horizon < 1) throw InvalidArgument("random_walk_forecast: horizon must be at least 1");
  return QuantileForecastSet{std::move(model_id), origin, {quantiles.begin(), quantiles.end()},
                             Eigen::MatrixXd::Zero(horizon, static_cast<Eigen::Index>(quantiles.size()))};
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_forecasts(std::span<const QuantileForecastSet> sets, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "model_id,origin,horizon,quantile,value\n";
  for (const auto& s : sets) {
    for (int h = 1; h <= s.horizons(); ++h) {
      for (std::size_t j = 0; j < s.quantiles.size(); ++j) {
        out << s.model_id << ',' << s.origin.str() << ',' << h << ',' << format_double(s.quantiles[j]) << ','
            << format_double(s.values(h - 1, static_cast<Eigen::Index>(j))) << '\n';
      }
    }
  }
}

std::vector<QuantileForecastSet> read_forecasts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("model_id,origin,horizon,quantile,value", 0) != 0) {
    throw IoError(path.string() + ": unexpected forecast file header");
  }
  struct Cells {
    std::vector<double> quantiles;
    std::map<std::pair<int, std::size_t>, double> values;
  };
  // keep first-seen order of (model, origin) blocks
  std::vector<std::pair<std::string, int>> order;
  std::map<std::pair<std::string, int>, Cells> blocks;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 5) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
    const auto key = std::make_pair(f[0], YearMonth::parse(f[1]).index());
    auto [it, inserted] = blocks.try_emplace(key);
    if (inserted) order.push_back(key);
    Cells& c = it->second;
    const int h = std::stoi(f[2]);
    const double q = std::stod(f[3]);
    auto qit = std::find_if(c.quantiles.begin(), c.quantiles.end(), [&](double x) { return std::abs(x - q) < 1e-9; });
    std::size_t qi = static_cast<std::size_t>(qit - c.quantiles.begin());
    if (qit == c.quantiles.end()) c.quantiles.push_back(q);
    c.values[{h, qi}] = std::stod(f[4]);
  }
  std::vector<QuantileForecastSet> out;
  for (const auto& key : order) {
    const Cells& c = blocks.at(key);
    int horizon = 0;
    for (const auto& [hq, v] : c.values) horizon = std::max(horizon, hq.first);
    QuantileForecastSet s{key.first, YearMonth::from_index(key.second), c.quantiles,
                          Eigen::MatrixXd::Constant(horizon, static_cast<Eigen::Index>(c.quantiles.size()),
                                                    std::numeric_limits<double>::quiet_NaN())};
    for (const auto& [hq, v] : c.values) s.values(hq.first - 1, static_cast<Eigen::Index>(hq.second)) = v;
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace qbvar::forecast
