#include "qbvar/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qbvar/error.hpp"

namespace qbvar::data {

TransformCode transform_code_from_int(int code) {
  switch (code) {
    case 1:
      return TransformCode::FirstDifference;
    case 2:
      return TransformCode::None;
    case 5:
      return TransformCode::LogDifference;
    default:
      throw InvalidArgument("unknown transformation code " + std::to_string(code));
  }
}

std::vector<double> apply_transform(std::span<const double> levels, TransformCode code) {
  if (code == TransformCode::None) return {levels.begin(), levels.end()};
  if (code != TransformCode::FirstDifference && code != TransformCode::LogDifference) {
    throw InvalidArgument("unknown transformation code " + std::to_string(static_cast<int>(code)));
  }
  if (levels.size() < 2) throw InvalidArgument("differencing requires at least two observations");

  std::vector<double> out(levels.size() - 1);
  if (code == TransformCode::FirstDifference) {
    for (std::size_t t = 1; t < levels.size(); ++t) out[t - 1] = levels[t] - levels[t - 1];
    return out;
  }
  for (double v : levels) {
    if (!is_missing(v) && !(v > 0.0)) {
      throw InvalidArgument("log difference requires strictly positive levels (got " + std::to_string(v) + ")");
    }
  }
  for (std::size_t t = 1; t < levels.size(); ++t) out[t - 1] = std::log(levels[t]) - std::log(levels[t - 1]);
  return out;
}

std::vector<double> deflate(std::span<const double> nominal, std::span<const double> cpi) {
  if (nominal.size() != cpi.size()) throw InvalidArgument("deflate: nominal and deflator lengths differ");
  if (cpi.empty()) return {};
  for (double c : cpi) {
    if (!(c > 0.0)) throw InvalidArgument("deflate: deflator must be strictly positive");
  }
  const double base = cpi.back();
  std::vector<double> out(nominal.size());
  for (std::size_t t = 0; t < nominal.size(); ++t) out[t] = nominal[t] * (base / cpi[t]);
  return out;
}

std::vector<double> splice_by_growth(std::span<const double> target, std::span<const double> donor) {
  if (target.size() != donor.size()) throw InvalidArgument("splice_by_growth: length mismatch");
  std::vector<double> out(target.begin(), target.end());
  std::size_t first = 0;
  while (first < out.size() && is_missing(out[first])) ++first;
  if (first == out.size()) throw InvalidArgument("splice_by_growth: target has no observations");
  for (std::size_t t = first; t-- > 0;) {
    const double d0 = donor[t];
    const double d1 = donor[t + 1];
    if (is_missing(d0)) break;
    if (!(d0 > 0.0) || !(d1 > 0.0)) throw InvalidArgument("splice_by_growth: donor must be positive");
    out[t] = out[t + 1] * std::exp(std::log(d0) - std::log(d1));
  }
  return out;
}

std::vector<double> rolling_skewness(std::span<const double> x, std::size_t window) {
  if (window < 3) throw InvalidArgument("rolling_skewness: window must be at least 3");
  if (x.size() < window) throw InvalidArgument("rolling_skewness: series shorter than window");

  std::vector<double> out;
  out.reserve(x.size() - window + 1);
  const double w = static_cast<double>(window);
  for (std::size_t end = window; end <= x.size(); ++end) {
    auto win = x.subspan(end - window, window);
    if (std::any_of(win.begin(), win.end(), is_missing)) {
      out.push_back(kMissing);
      continue;
    }
    double mean = 0.0;
    double scale = 0.0;
    for (double v : win) {
      mean += v;
      scale = std::max(scale, std::abs(v));
    }
    mean /= w;
    double m2 = 0.0;
    double m3 = 0.0;
    for (double v : win) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= w;
    m3 /= w;
    // rounding noise in the mean leaves m2 ~ (eps * scale)^2 for constant windows
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    if (m2 <= noise * noise) {
      out.push_back(kMissing);
    } else {
      out.push_back(m3 / std::pow(m2, 1.5));
    }
  }
  return out;
}

std::size_t TimeSeriesPanel::column_index(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidArgument("unknown series '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void TimeSeriesPanel::validate() const {
  if (columns.size() != names.size() || tcodes.size() != names.size()) {
    throw InvalidArgument("panel: names, columns and tcodes disagree in count");
  }
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (months_between(dates[i - 1], dates[i]) != 1) {
      throw InvalidArgument("panel: dates must be consecutive months (break at " + dates[i].str() + ")");
    }
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& col = columns[c];
    if (col.size() != dates.size()) throw InvalidArgument("panel: column '" + names[c] + "' has wrong length");
    std::size_t t = 0;
    while (t < col.size() && is_missing(col[t])) ++t;
    for (; t < col.size(); ++t) {
      if (is_missing(col[t])) {
        throw InvalidArgument("panel: interior missing value in '" + names[c] + "' at " + dates[t].str());
      }
    }
  }
}

TimeSeriesPanel TimeSeriesPanel::truncated(const YearMonth& last) const {
  TimeSeriesPanel out;
  out.names = names;
  out.tcodes = tcodes;
  std::size_t keep = 0;
  while (keep < dates.size() && dates[keep] <= last) ++keep;
  out.dates.assign(dates.begin(), dates.begin() + static_cast<std::ptrdiff_t>(keep));
  out.columns.reserve(columns.size());
  for (const auto& col : columns) out.columns.emplace_back(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(keep));
  return out;
}

Eigen::MatrixXd TimeSeriesPanel::complete_matrix(std::span<const std::string> selection, YearMonth* first_date) const {
  std::vector<std::size_t> idx;
  idx.reserve(selection.size());
  for (const auto& name : selection) idx.push_back(column_index(name));

  std::size_t start = 0;
  for (std::size_t c : idx) {
    std::size_t t = 0;
    while (t < rows() && is_missing(columns[c][t])) ++t;
    start = std::max(start, t);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows() - std::min(start, rows())), static_cast<Eigen::Index>(idx.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double v = columns[idx[j]][start + static_cast<std::size_t>(r)];
      if (is_missing(v)) throw InvalidArgument("panel: interior missing value in '" + names[idx[j]] + "'");
      m(r, static_cast<Eigen::Index>(j)) = v;
    }
  }
  if (first_date != nullptr && start < rows()) *first_date = dates[start];
  return m;
}

std::map<std::string, TransformCode> read_tcodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tcode file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed tcode file " + path.string() + ": " + e.what());
  }
  std::map<std::string, TransformCode> out;
  for (const auto& [name, code] : j.items()) out[name] = transform_code_from_int(code.get<int>());
  return out;
}

void write_tcodes(const std::map<std::string, TransformCode>& tcodes, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, code] : tcodes) j[name] = static_cast<int>(code);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delimiter)) fields.push_back(field);
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

double parse_cell(const std::string& raw, std::size_t line_no) {
  const std::string cell = trim(raw);
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".") return kMissing;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw IoError("line " + std::to_string(line_no) + ": cannot parse '" + cell + "' as a number");
  }
  return v;
}

}  // namespace

TimeSeriesPanel read_panel_csv(const std::filesystem::path& path, const std::map<std::string, TransformCode>& tcodes,
                               char delimiter) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  TimeSeriesPanel panel;
  auto header = split(line, delimiter);
  if (header.size() < 2) throw IoError(path.string() + ": header needs a date column and at least one series");
  for (std::size_t c = 1; c < header.size(); ++c) {
    panel.names.push_back(trim(header[c]));
    auto it = tcodes.find(panel.names.back());
    panel.tcodes.push_back(it == tcodes.end() ? TransformCode::None : it->second);
  }
  panel.columns.resize(panel.names.size());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, delimiter);
    if (fields.size() != header.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                    " fields, got " + std::to_string(fields.size()));
    }
    panel.dates.push_back(YearMonth::parse(trim(fields[0])));
    for (std::size_t c = 1; c < fields.size(); ++c) panel.columns[c - 1].push_back(parse_cell(fields[c], line_no));
  }
  panel.validate();
  return panel;
}

void write_panel_csv(const TimeSeriesPanel& panel, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "date";
  for (const auto& name : panel.names) out << delimiter << name;
  out << '\n';
  out.precision(17);
  for (std::size_t t = 0; t < panel.rows(); ++t) {
    out << panel.dates[t].str();
    for (const auto& col : panel.columns) {
      out << delimiter;
      if (!is_missing(col[t])) out << col[t];
    }
    out << '\n';
  }
}

TimeSeriesPanel transform_panel(const TimeSeriesPanel& raw) {
  raw.validate();
  if (raw.rows() < 2) throw InvalidArgument("transform_panel: need at least two dates");
  TimeSeriesPanel out;
  out.names = raw.names;
  out.dates.assign(raw.dates.begin() + 1, raw.dates.end());
  out.tcodes.assign(raw.cols(), TransformCode::None);
  for (std::size_t c = 0; c < raw.cols(); ++c) {
    std::vector<double> col;
    if (raw.tcodes[c] == TransformCode::None) {
      col.assign(raw.columns[c].begin() + 1, raw.columns[c].end());
    } else {
      col = apply_transform(raw.columns[c], raw.tcodes[c]);
    }
    out.columns.push_back(std::move(col));
  }
  out.validate();
  return out;
}

LagDesign build_lag_design(const Eigen::MatrixXd& y_full, int lags, std::vector<std::string> names) {
  if (lags < 1) throw InvalidArgument("lag order must be at least 1");
  const Eigen::Index t_full = y_full.rows();
  const Eigen::Index n = y_full.cols();
  if (t_full <= lags) {
    throw InvalidArgument("insufficient observations: " + std::to_string(t_full) + " rows for " +
                          std::to_string(lags) + " lags");
  }
  if (!y_full.allFinite()) throw InvalidArgument("lag design input contains missing or non-finite values");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != n) {
    throw InvalidArgument("lag design: name count does not match columns");
  }

  LagDesign d;
  d.lags = lags;
  d.names = std::move(names);
  const Eigen::Index t = t_full - lags;
  d.y = y_full.bottomRows(t);
  d.x.resize(t, n * lags + 1);
  d.x.col(0).setOnes();
  for (int j = 1; j <= lags; ++j) {
    d.x.middleCols(1 + (j - 1) * n, n) = y_full.middleRows(lags - j, t);
  }
  return d;
}

}  // namespace qbvar::data
