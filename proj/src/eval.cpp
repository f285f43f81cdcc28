#include "qbvar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qbvar/error.hpp"

namespace qbvar::eval {

using forecast::format_double;

double pinball(double u, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("pinball: quantile level must lie in (0, 1)");
  if (u == 0.0) return 0.0;
  return u * (q - (u < 0.0 ? 1.0 : 0.0));
}

void EventWindow::validate() const {
  if (!(start < end)) throw InvalidArgument("event window '" + label + "' must start before it ends");
}

std::vector<EventWindow> default_event_windows() {
  return {
      {"2008 Financial Crisis", {2008, 1}, {2009, 12}},
      {"2014-2016 Oil Price Collapse", {2014, 1}, {2016, 12}},
      {"2020 COVID-19 Pandemic", {2020, 1}, {2020, 12}},
      {"1990-1991 Gulf War", {1990, 1}, {1991, 12}},
      {"2007-2008 Commodity Super-Cycle", {2007, 1}, {2008, 12}},
      {"2021-2022 Post-COVID/Ukraine Crisis", {2021, 1}, {2022, 12}},
  };
}

std::optional<double> Realizations::at(const YearMonth& date) const {
  const int offset = months_between(first, date);
  if (offset < 0) throw InvalidArgument("no realization for " + date.str() + ": before the first observation");
  if (offset >= static_cast<int>(values.size())) return std::nullopt;
  const double v = values[static_cast<std::size_t>(offset)];
  if (std::isnan(v)) throw InvalidArgument("missing realization at " + date.str());
  return v;
}

const CellScore& ScoreTable::at(const std::string& model, double q, int h) const {
  for (const auto& [key, score] : cells) {
    if (key.model == model && key.horizon == h && std::abs(key.quantile - q) < 1e-9) return score;
  }
  throw InvalidArgument("score table has no cell (" + model + ", " + format_double(q) + ", " + std::to_string(h) + ")");
}

std::vector<std::string> ScoreTable::models() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : cells) {
    if (std::find(out.begin(), out.end(), key.model) == out.end()) out.push_back(key.model);
  }
  return out;
}

std::vector<double> ScoreTable::quantiles() const {
  std::set<double> qs;
  for (const auto& [key, _] : cells) qs.insert(key.quantile);
  return {qs.begin(), qs.end()};
}

int ScoreTable::max_horizon() const {
  int h = 0;
  for (const auto& [key, _] : cells) h = std::max(h, key.horizon);
  return h;
}

ScoreTable average_qs(std::span<const forecast::QuantileForecastSet> forecasts, const Realizations& realized,
                      const std::optional<EventWindow>& window, Alignment alignment) {
  if (window) window->validate();
  ScoreTable table;
  table.window_label = window ? window->label : "full";
  std::map<CellKey, double> sums;
  for (const auto& set : forecasts) {
    for (int h = 1; h <= set.horizons(); ++h) {
      const YearMonth target_date = set.origin.plus_months(h);
      for (std::size_t j = 0; j < set.quantiles.size(); ++j) {
        CellKey key{set.model_id, set.quantiles[j], h};
        table.cells.try_emplace(key);  // covered cells appear even with no pairs
        const auto y = realized.at(target_date);
        if (!y) continue;
        if (window && !window->contains(alignment == Alignment::RealizationDate ? target_date : set.origin)) continue;
        const double u = *y - set.values(h - 1, static_cast<Eigen::Index>(j));
        sums[key] += pinball(u, set.quantiles[j]);
        table.cells[key].count += 1;
      }
    }
  }
  for (auto& [key, cell] : table.cells) {
    if (cell.count > 0) cell.mean = sums[key] / static_cast<double>(cell.count);
  }
  return table;
}

RatioTable qs_ratio(const ScoreTable& table, const std::string& numerator, const std::string& benchmark) {
  RatioTable out{table.window_label, numerator, benchmark, {}};
  std::map<std::pair<double, int>, const CellScore*> num;
  std::map<std::pair<double, int>, const CellScore*> den;
  for (const auto& [key, score] : table.cells) {
    if (key.model == numerator) num[{key.quantile, key.horizon}] = &score;
    if (key.model == benchmark) den[{key.quantile, key.horizon}] = &score;
  }
  if (num.empty()) throw InvalidArgument("qs_ratio: model '" + numerator + "' not in score table");
  if (den.empty()) throw InvalidArgument("qs_ratio: benchmark '" + benchmark + "' not in score table");
  if (num.size() != den.size()) throw InvalidArgument("qs_ratio: coverage mismatch between models");
  for (const auto& [cell, n] : num) {
    auto it = den.find(cell);
    if (it == den.end() || it->second->count != n->count) {
      throw InvalidArgument("qs_ratio: coverage mismatch between '" + numerator + "' and '" + benchmark + "'");
    }
    RatioCell rc;
    if (n->count > 0 && it->second->mean > 0.0) {
      rc.ratio = n->mean / it->second->mean;
      rc.defined = true;
    }
    out.cells[cell] = rc;
  }
  return out;
}

double crossing_frequency(std::span<const forecast::QuantileForecastSet> forecasts) {
  std::size_t total = 0;
  std::size_t crossed = 0;
  for (const auto& set : forecasts) {
    std::vector<std::size_t> order(set.quantiles.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return set.quantiles[a] < set.quantiles[b]; });
    for (int h = 0; h < set.horizons(); ++h) {
      ++total;
      for (std::size_t j = 1; j < order.size(); ++j) {
        if (set.values(h, static_cast<Eigen::Index>(order[j])) < set.values(h, static_cast<Eigen::Index>(order[j - 1]))) {
          ++crossed;
          break;
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(crossed) / static_cast<double>(total);
}

void write_score_csv(const ScoreTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "window,model,quantile,horizon,count,score\n";
  for (const auto& [key, cell] : table.cells) {
    out << table.window_label << ',' << key.model << ',' << format_double(key.quantile) << ',' << key.horizon << ','
        << cell.count << ',' << (cell.count > 0 ? format_double(cell.mean) : "n/a") << '\n';
  }
}

void write_ratio_csv(std::span<const RatioTable> tables, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "window,model,benchmark,quantile,horizon,ratio\n";
  for (const auto& t : tables) {
    for (const auto& [cell, rc] : t.cells) {
      out << t.window_label << ',' << t.numerator << ',' << t.benchmark << ',' << format_double(cell.first) << ','
          << cell.second << ',' << (rc.defined ? format_double(rc.ratio) : "n/a") << '\n';
    }
  }
}

std::vector<RatioTable> read_ratio_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("window,model,benchmark,quantile,horizon,ratio", 0) != 0) {
    throw IoError(path.string() + ": unexpected ratio file header");
  }
  std::vector<RatioTable> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw IoError(path.string() + ": malformed ratio row");
    auto it = std::find_if(out.begin(), out.end(), [&](const RatioTable& t) {
      return t.window_label == f[0] && t.numerator == f[1] && t.benchmark == f[2];
    });
    if (it == out.end()) {
      out.push_back(RatioTable{f[0], f[1], f[2], {}});
      it = out.end() - 1;
    }
    RatioCell rc;
    if (f[5] != "n/a") {
      rc.ratio = std::stod(f[5]);
      rc.defined = true;
    }
    it->cells[{std::stod(f[3]), std::stoi(f[4])}] = rc;
  }
  return out;
}

std::string render_ratio_tables(std::span<const RatioTable> tables) {
  if (tables.empty()) return {};
  std::set<double> quantiles;
  int max_h = 0;
  for (const auto& t : tables) {
    if (t.benchmark != tables.front().benchmark) throw InvalidArgument("render: tables use different benchmarks");
    for (const auto& [cell, _] : t.cells) {
      quantiles.insert(cell.first);
      max_h = std::max(max_h, cell.second);
    }
  }
  std::ostringstream os;
  os << "Window: " << tables.front().window_label << "  (QS ratio vs " << tables.front().benchmark
     << "; * marks < 1.00)\n";
  char buf[64];
  os << "  h ";
  for (const auto& t : tables) {
    std::snprintf(buf, sizeof buf, " | %-*s", static_cast<int>(quantiles.size()) * 8 - 1, t.numerator.c_str());
    os << buf;
  }
  os << "\n    ";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    os << " |";
    for (double q : quantiles) {
      std::snprintf(buf, sizeof buf, " QS%-4.0f ", q * 100.0);
      os << buf;
    }
  }
  os << '\n';
  for (int h = 1; h <= max_h; ++h) {
    std::snprintf(buf, sizeof buf, "%3d ", h);
    os << buf;
    for (const auto& t : tables) {
      os << " |";
      for (double q : quantiles) {
        auto it = t.cells.find({q, h});
        if (it == t.cells.end() || !it->second.defined) {
          std::snprintf(buf, sizeof buf, " %-6s ", "n/a");
        } else {
          std::snprintf(buf, sizeof buf, " %5.2f%c ", it->second.ratio, it->second.ratio < 1.0 ? '*' : ' ');
        }
        os << buf;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace qbvar::eval
