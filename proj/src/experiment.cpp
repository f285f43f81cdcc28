#include "qbvar/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "qbvar/bvar.hpp"
#include "qbvar/error.hpp"

namespace qbvar::experiment {

namespace fs = std::filesystem;
using forecast::QuantileForecastSet;
using nlohmann::json;

namespace {

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Qbvar:
      return "qbvar";
    case ModelKind::Bvar:
      return "bvar";
    case ModelKind::RandomWalk:
      return "rw";
  }
  return "unknown";
}

ModelKind model_kind_from(const std::string& s) {
  if (s == "qbvar") return ModelKind::Qbvar;
  if (s == "bvar") return ModelKind::Bvar;
  if (s == "rw") return ModelKind::RandomWalk;
  throw InvalidArgument("unknown model type '" + s + "'");
}

eval::EventWindow window_from_json(const json& j) {
  eval::EventWindow w{j.at("label").get<std::string>(), YearMonth::parse(j.at("start").get<std::string>()),
                      YearMonth::parse(j.at("end").get<std::string>())};
  w.validate();
  return w;
}

json window_to_json(const eval::EventWindow& w) {
  return json{{"label", w.label}, {"start", w.start.str()}, {"end", w.end.str()}};
}

std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "window" : out;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
// exception (by index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, threads));
  if (n == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n, count); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() || base_dir.empty() ? fs::path(p) : base_dir / p; };
  c.data = resolve(j.at("data").get<std::string>());
  if (j.contains("tcodes")) {
    if (j["tcodes"].is_string()) {
      c.tcodes = data::read_tcodes(resolve(j["tcodes"].get<std::string>()));
    } else {
      for (const auto& [name, code] : j["tcodes"].items()) c.tcodes[name] = data::transform_code_from_int(code.get<int>());
    }
  }
  if (j.contains("deflate")) {
    c.deflate = DeflateSpec{j["deflate"].at("cpi").get<std::string>(),
                            j["deflate"].at("series").get<std::vector<std::string>>()};
  }
  if (j.contains("splice")) {
    for (const auto& s : j["splice"]) c.splices.push_back({s.at("target").get<std::string>(), s.at("donor").get<std::string>()});
  }
  c.target = j.at("target").get<std::string>();
  c.variables = j.at("variables").get<std::vector<std::string>>();
  c.quantiles = j.value("quantiles", c.quantiles);
  c.horizon = j.value("horizon", c.horizon);
  c.factors = j.value("factors", c.factors);
  if (j.contains("mcmc")) {
    const auto& m = j["mcmc"];
    c.mcmc.iterations = m.value("iterations", c.mcmc.iterations);
    c.mcmc.burn_in = m.value("burn_in", c.mcmc.burn_in);
    c.mcmc.thin = m.value("thin", c.mcmc.thin);
  }
  if (j.contains("prior")) {
    const auto& p = j["prior"];
    c.prior.lambda_variance = p.value("lambda_variance", c.prior.lambda_variance);
    c.prior.sigma_shape = p.value("sigma_shape", c.prior.sigma_shape);
    c.prior.sigma_scale = p.value("sigma_scale", c.prior.sigma_scale);
    const auto update = p.value("sigma_update", std::string("conjugate"));
    if (update == "conjugate") {
      c.prior.sigma_update = model::SigmaUpdate::Conjugate;
    } else if (update == "printed") {
      c.prior.sigma_update = model::SigmaUpdate::Printed;
    } else {
      throw InvalidArgument("prior.sigma_update must be 'conjugate' or 'printed'");
    }
  }
  for (const auto& m : j.at("models")) {
    ModelSpec spec;
    spec.kind = model_kind_from(m.at("type").get<std::string>());
    spec.lags = m.value("lags", spec.kind == ModelKind::Bvar ? 12 : 4);
    spec.id = m.value("id", model_kind_name(spec.kind) + (spec.kind == ModelKind::RandomWalk ? "" : std::to_string(spec.lags)));
    c.models.push_back(spec);
  }
  if (j.contains("evaluation_windows")) {
    for (const auto& w : j["evaluation_windows"]) c.evaluation_windows.push_back(window_from_json(w));
  } else {
    c.evaluation_windows = {{"2008M1-2025M2", {2008, 1}, {2025, 2}}, {"2013M1-2025M2", {2013, 1}, {2025, 2}}};
  }
  if (j.contains("event_windows")) {
    if (j["event_windows"].is_string() && j["event_windows"] == "default") {
      c.event_windows = eval::default_event_windows();
    } else {
      for (const auto& w : j["event_windows"]) c.event_windows.push_back(window_from_json(w));
    }
  }
  if (j.contains("alignment")) {
    const auto a = j["alignment"].get<std::string>();
    if (a == "realization") {
      c.alignment = eval::Alignment::RealizationDate;
    } else if (a == "origin") {
      c.alignment = eval::Alignment::OriginDate;
    } else {
      throw InvalidArgument("alignment must be 'realization' or 'origin'");
    }
  }
  if (j.contains("benchmarks")) {
    c.benchmarks = j["benchmarks"].get<std::vector<std::string>>();
  } else {
    for (const auto& m : c.models) {
      if (m.kind != ModelKind::Qbvar) c.benchmarks.push_back(m.id);
    }
  }
  if (j.contains("combinations")) {
    for (const auto& cj : j["combinations"]) {
      CombinationSpec cs;
      cs.strategy = combine::strategy_from_string(cj.at("strategy").get<std::string>());
      cs.window = cj.value("window", cs.strategy == combine::Strategy::Optimal ? 75 : 50);
      cs.lambda = cj.value("lambda", 0.5);
      c.combinations.push_back(cs);
    }
  }
  if (j.contains("combine")) {
    c.combine_qbvar = j["combine"].value("qbvar", "");
    c.combine_benchmark = j["combine"].value("benchmark", "");
  }
  if (c.combine_qbvar.empty()) {
    for (const auto& m : c.models) {
      if (m.kind == ModelKind::Qbvar) {
        c.combine_qbvar = m.id;
        break;
      }
    }
  }
  if (c.combine_benchmark.empty()) {
    for (const auto& m : c.models) {
      if (m.kind == ModelKind::Bvar) {
        c.combine_benchmark = m.id;
        break;
      }
    }
  }
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>());
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed config " + path.string() + ": " + e.what());
  }
  try {
    return from_json(j, path.parent_path());
  } catch (const json::exception& e) {
    throw InvalidArgument("invalid config " + path.string() + ": " + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json j;
  j["data"] = data.string();
  json tc = json::object();
  for (const auto& [name, code] : tcodes) tc[name] = static_cast<int>(code);
  j["tcodes"] = tc;
  if (deflate) j["deflate"] = json{{"cpi", deflate->cpi}, {"series", deflate->series}};
  json sp = json::array();
  for (const auto& s : splices) sp.push_back(json{{"target", s.target}, {"donor", s.donor}});
  j["splice"] = sp;
  j["target"] = target;
  j["variables"] = variables;
  j["quantiles"] = quantiles;
  j["horizon"] = horizon;
  j["factors"] = factors;
  j["mcmc"] = json{{"iterations", mcmc.iterations}, {"burn_in", mcmc.burn_in}, {"thin", mcmc.thin}};
  j["prior"] = json{{"lambda_variance", prior.lambda_variance},
                    {"sigma_shape", prior.sigma_shape},
                    {"sigma_scale", prior.sigma_scale},
                    {"sigma_update", prior.sigma_update == model::SigmaUpdate::Printed ? "printed" : "conjugate"}};
  json models_j = json::array();
  for (const auto& m : models) models_j.push_back(json{{"id", m.id}, {"type", model_kind_name(m.kind)}, {"lags", m.lags}});
  j["models"] = models_j;
  json ew = json::array();
  for (const auto& w : evaluation_windows) ew.push_back(window_to_json(w));
  j["evaluation_windows"] = ew;
  json ev = json::array();
  for (const auto& w : event_windows) ev.push_back(window_to_json(w));
  j["event_windows"] = ev;
  j["alignment"] = alignment == eval::Alignment::RealizationDate ? "realization" : "origin";
  j["benchmarks"] = benchmarks;
  json comb = json::array();
  for (const auto& c : combinations) {
    comb.push_back(json{{"strategy", combine::to_string(c.strategy)}, {"window", c.window}, {"lambda", c.lambda}});
  }
  j["combinations"] = comb;
  j["combine"] = json{{"qbvar", combine_qbvar}, {"benchmark", combine_benchmark}};
  j["seed"] = seed;
  return j;
}

void ExperimentConfig::validate() const {
  if (variables.empty()) throw InvalidArgument("config: no variables");
  if (std::count(variables.begin(), variables.end(), target) != 1) {
    throw InvalidArgument("config: target '" + target + "' must appear exactly once among the variables");
  }
  if (horizon < 1) throw InvalidArgument("config: horizon must be at least 1");
  if (quantiles.empty()) throw InvalidArgument("config: no quantile levels");
  for (double q : quantiles) model::QuantileLevel check(q);
  if (models.empty()) throw InvalidArgument("config: no models");
  std::set<std::string> ids;
  for (const auto& m : models) {
    if (!ids.insert(m.id).second) throw InvalidArgument("config: duplicate model id '" + m.id + "'");
    if (m.id.find(',') != std::string::npos) throw InvalidArgument("config: model ids may not contain commas");
    if (m.kind != ModelKind::RandomWalk && m.lags < 1) throw InvalidArgument("config: lag order must be >= 1");
  }
  for (const auto& b : benchmarks) {
    if (!ids.count(b)) throw InvalidArgument("config: benchmark '" + b + "' is not a model id");
  }
  if (!combinations.empty()) {
    auto is_kind = [&](const std::string& id, bool want_qbvar) {
      for (const auto& m : models) {
        if (m.id == id) return want_qbvar ? m.kind == ModelKind::Qbvar : true;
      }
      return false;
    };
    if (!is_kind(combine_qbvar, true)) throw InvalidArgument("config: combinations need a QBVAR model to combine");
    if (!is_kind(combine_benchmark, false)) throw InvalidArgument("config: combination benchmark is not a model id");
    for (const auto& c : combinations) {
      if (c.strategy == combine::Strategy::Fixed && !(c.lambda >= 0.0 && c.lambda <= 1.0)) {
        throw InvalidArgument("config: fixed combination weight must lie in [0, 1]");
      }
      if (c.strategy != combine::Strategy::Fixed && c.window < 1) {
        throw InvalidArgument("config: combination window must be at least 1");
      }
    }
  }
  if (evaluation_windows.empty()) throw InvalidArgument("config: no evaluation windows");
  model::QbvarConfig probe;
  probe.factors = factors;
  probe.prior = prior;
  probe.mcmc = mcmc;
  probe.validate();
  if (threads < 1) throw InvalidArgument("config: threads must be at least 1");
}

void ExperimentConfig::apply_environment() {
  if (const char* t = std::getenv("QBVAR_THREADS"); t != nullptr && *t != '\0') {
    threads = std::max(1, std::atoi(t));
  }
  if (const char* o = std::getenv("QBVAR_OUTPUT_DIR"); o != nullptr && *o != '\0') output_dir = o;
}

data::TimeSeriesPanel prepare_panel(const data::TimeSeriesPanel& raw, const ExperimentConfig& config) {
  data::TimeSeriesPanel panel = raw;
  if (config.deflate) {
    const auto& cpi = panel.column(config.deflate->cpi);
    for (const auto& name : config.deflate->series) {
      auto& col = panel.columns[panel.column_index(name)];
      std::size_t first = 0;
      while (first < col.size() && data::is_missing(col[first])) ++first;
      if (first == col.size()) continue;
      const auto real = data::deflate(std::span(col).subspan(first), std::span(cpi).subspan(first));
      std::copy(real.begin(), real.end(), col.begin() + static_cast<std::ptrdiff_t>(first));
    }
  }
  for (const auto& s : config.splices) {
    panel.columns[panel.column_index(s.target)] = data::splice_by_growth(panel.column(s.target), panel.column(s.donor));
  }
  for (std::size_t c = 0; c < panel.cols(); ++c) {
    if (auto it = config.tcodes.find(panel.names[c]); it != config.tcodes.end()) panel.tcodes[c] = it->second;
  }
  return data::transform_panel(panel);
}

std::vector<YearMonth> forecast_origins(const ExperimentConfig& config, const YearMonth& last_observation) {
  std::set<int> months;
  for (const auto& w : config.evaluation_windows) {
    for (YearMonth d = w.start; d <= w.end && d < last_observation; d = d.plus_months(1)) months.insert(d.index());
  }
  std::vector<YearMonth> out;
  for (int m : months) out.push_back(YearMonth::from_index(m));
  return out;
}

std::vector<QuantileForecastSet> forecast_at_origin(const data::TimeSeriesPanel& raw, const ExperimentConfig& config,
                                                    const YearMonth& origin, int threads) {
  const auto panel = prepare_panel(raw.truncated(origin), config);
  if (panel.rows() == 0 || panel.dates.back() != origin) {
    throw InvalidArgument("no data at origin " + origin.str());
  }
  const Eigen::MatrixXd y = panel.complete_matrix(config.variables);
  const auto target = static_cast<Eigen::Index>(
      std::find(config.variables.begin(), config.variables.end(), config.target) - config.variables.begin());

  struct Task {
    std::size_t model;
    std::size_t quantile;  // index into config.quantiles (QBVAR only)
  };
  std::vector<Task> tasks;
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    switch (config.models[m].kind) {
      case ModelKind::Qbvar:
        for (std::size_t q = 0; q < config.quantiles.size(); ++q) tasks.push_back({m, q});
        break;
      case ModelKind::Bvar:
        tasks.push_back({m, 0});
        break;
      case ModelKind::RandomWalk:
        break;
    }
  }

  std::vector<forecast::PathSet> paths(tasks.size());
  const auto origin_id = static_cast<std::uint64_t>(origin.index());
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const auto& spec = config.models[tasks[i].model];
    const auto design = data::build_lag_design(y, spec.lags, config.variables);
    const std::uint64_t chain_seed = Rng::derive_seed(config.seed, {origin_id, tasks[i].model, tasks[i].quantile, 0});
    model::PosteriorDrawSet draws;
    if (spec.kind == ModelKind::Qbvar) {
      model::QbvarConfig qc{config.quantiles[tasks[i].quantile], spec.lags, config.factors, config.prior, config.mcmc,
                            chain_seed};
      draws = model::run_chain(design, qc);
    } else {
      bvar::BvarConfig bc{spec.lags, config.factors, config.prior, config.mcmc, chain_seed};
      draws = bvar::run_bvar_chain(design, bc);
    }
    Rng rng(Rng::derive_seed(config.seed, {origin_id, tasks[i].model, tasks[i].quantile, 1}));
    paths[i] = forecast::simulate_paths(draws, y, config.horizon, rng);
  });

  std::vector<QuantileForecastSet> out;
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    const auto& spec = config.models[m];
    if (spec.kind == ModelKind::RandomWalk) {
      out.push_back(forecast::random_walk_forecast(spec.id, origin, config.horizon, config.quantiles));
      continue;
    }
    std::vector<const forecast::PathSet*> mine;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].model == m) mine.push_back(&paths[i]);
    }
    if (spec.kind == ModelKind::Qbvar) {
      out.push_back(forecast::median_forecast(spec.id, origin, config.quantiles, mine, target));
    } else {
      out.push_back(forecast::predictive_quantile_forecast(spec.id, origin, config.quantiles, *mine.front(), target));
    }
  }
  for (const auto& s : out) s.validate();
  return out;
}

namespace {

eval::Realizations realizations_of(const data::TimeSeriesPanel& transformed, const std::string& target) {
  YearMonth first;
  const Eigen::MatrixXd m = transformed.complete_matrix(std::vector<std::string>{target}, &first);
  return eval::Realizations{first, std::vector<double>(m.data(), m.data() + m.size())};
}

}  // namespace

eval::Realizations load_realizations(const ExperimentConfig& config) {
  return realizations_of(prepare_panel(data::read_panel_csv(config.data, config.tcodes), config), config.target);
}

RunSummary run_recursive(const ExperimentConfig& config) {
  config.validate();
  const auto raw = data::read_panel_csv(config.data, config.tcodes);
  const auto full = prepare_panel(raw, config);
  const auto realized = realizations_of(full, config.target);

  RunSummary summary;
  summary.origins = forecast_origins(config, full.dates.back());
  if (summary.origins.empty()) throw InvalidArgument("evaluation windows contain no forecast origin inside the data");

  std::vector<std::vector<QuantileForecastSet>> per_origin(summary.origins.size());
  std::vector<std::string> failures(summary.origins.size());
  parallel_for(summary.origins.size(), config.threads, [&](std::size_t i) {
    try {
      per_origin[i] = forecast_at_origin(raw, config, summary.origins[i], 1);
    } catch (const std::exception& e) {
      failures[i] = summary.origins[i].str() + ": " + e.what();
    }
  });
  for (auto& f : failures) {
    if (!f.empty()) summary.failed_origins.push_back(f);
  }
  if (static_cast<double>(summary.failed_origins.size()) > 0.01 * static_cast<double>(summary.origins.size())) {
    throw NumericError(std::to_string(summary.failed_origins.size()) + " of " + std::to_string(summary.origins.size()) +
                       " origins failed; first: " + summary.failed_origins.front());
  }

  std::map<std::string, std::vector<QuantileForecastSet>> by_model;
  for (const auto& m : config.models) by_model[m.id];
  for (auto& sets : per_origin) {
    for (auto& s : sets) by_model[s.model_id].push_back(std::move(s));
  }
  for (const auto& m : config.models) {
    for (const auto& s : by_model[m.id]) summary.forecasts.push_back(s);
  }
  const std::size_t model_forecast_count = summary.forecasts.size();

  fs::create_directories(config.output_dir);
  auto out_path = [&](const std::string& name) {
    summary.files.push_back(config.output_dir / name);
    return summary.files.back();
  };

  forecast::write_forecasts(summary.forecasts, out_path("forecasts.csv"));

  // combinations
  std::vector<QuantileForecastSet> combined_sets;
  for (const auto& spec : config.combinations) {
    const std::string id = "comb_" + combine::to_string(spec.strategy);
    auto result = combine::combine_recursive(by_model[config.combine_qbvar], by_model[config.combine_benchmark],
                                             realized, spec.strategy, spec.window, spec.lambda, id);
    combine::write_weights_csv(result, out_path("weights_" + combine::to_string(spec.strategy) + ".csv"));
    for (auto& s : result.combined) combined_sets.push_back(std::move(s));
  }
  if (!combined_sets.empty()) forecast::write_forecasts(combined_sets, out_path("combinations.csv"));
  for (auto& s : combined_sets) summary.forecasts.push_back(std::move(s));

  std::vector<std::string> all_models;
  for (const auto& m : config.models) all_models.push_back(m.id);
  for (const auto& spec : config.combinations) all_models.push_back("comb_" + combine::to_string(spec.strategy));

  // scores: evaluation windows select origins, event windows select pairs
  for (const auto& w : config.evaluation_windows) {
    std::vector<QuantileForecastSet> in_window;
    for (const auto& s : summary.forecasts) {
      if (w.contains(s.origin)) in_window.push_back(s);
    }
    auto table = eval::average_qs(in_window, realized);
    table.window_label = w.label;
    summary.scores.push_back(std::move(table));
  }
  for (const auto& w : config.event_windows) {
    summary.scores.push_back(eval::average_qs(summary.forecasts, realized, w, config.alignment));
  }
  for (const auto& table : summary.scores) {
    const auto present = table.models();
    for (const auto& bench : config.benchmarks) {
      if (std::find(present.begin(), present.end(), bench) == present.end()) continue;
      for (const auto& m : all_models) {
        if (std::find(present.begin(), present.end(), m) == present.end()) continue;
        summary.ratios.push_back(eval::qs_ratio(table, m, bench));
      }
    }
  }

  {
    std::ostringstream os;
    os << "window,model,quantile,horizon,count,score\n";
    for (const auto& table : summary.scores) {
      for (const auto& [key, cell] : table.cells) {
        os << table.window_label << ',' << key.model << ',' << forecast::format_double(key.quantile) << ','
           << key.horizon << ',' << cell.count << ','
           << (cell.count > 0 ? forecast::format_double(cell.mean) : "n/a") << '\n';
      }
    }
    write_text(out_path("scores.csv"), os.str());
  }
  eval::write_ratio_csv(summary.ratios, out_path("ratios.csv"));

  // lambda curves for the configured combination pair
  if (!config.combinations.empty()) {
    for (const auto& w : config.evaluation_windows) {
      std::vector<QuantileForecastSet> qs, bs;
      for (const auto& s : by_model[config.combine_qbvar]) {
        if (w.contains(s.origin)) qs.push_back(s);
      }
      for (const auto& s : by_model[config.combine_benchmark]) {
        if (w.contains(s.origin)) bs.push_back(s);
      }
      const auto curve = combine::lambda_curve(qs, bs, realized);
      combine::write_lambda_curve_csv(curve, out_path("lambda_curve_" + slug(w.label) + ".csv"));
    }
  }

  {
    std::ostringstream os;
    os << "model,crossing_frequency\n";
    for (const auto& m : config.models) {
      os << m.id << ',' << forecast::format_double(eval::crossing_frequency(by_model[m.id])) << '\n';
    }
    write_text(out_path("diagnostics.csv"), os.str());
  }
  (void)model_forecast_count;

  json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = config.seed;
  manifest["config_sha256"] = sha256_hex(config.to_json().dump());
  manifest["config"] = config.to_json();
  json origins = json::array();
  for (const auto& o : summary.origins) origins.push_back(o.str());
  manifest["origins"] = origins;
  manifest["failed_origins"] = summary.failed_origins;
  json files = json::array();
  for (const auto& f : summary.files) files.push_back(json{{"file", f.filename().string()}, {"sha256", sha256_file(f)}});
  manifest["files"] = files;
  write_text(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

std::string report(const fs::path& run_dir) {
  const fs::path manifest_path = run_dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("incomplete run directory: " + manifest_path.string() + " missing");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest: " + std::string(e.what()));
  }
  for (const auto& f : manifest.at("files")) {
    const fs::path p = run_dir / f.at("file").get<std::string>();
    if (!fs::exists(p)) throw IoError("incomplete run directory: " + p.string() + " missing");
  }
  const auto ratios = eval::read_ratio_csv(run_dir / "ratios.csv");

  // group by (window, benchmark) in first-seen order
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<eval::RatioTable>> groups;
  for (const auto& t : ratios) {
    auto key = std::make_pair(t.window_label, t.benchmark);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(t);
  }
  std::ostringstream os;
  os << "QBVAR run report (" << manifest.value("version", "") << ", seed " << manifest.value("seed", 0ULL) << ")\n\n";
  for (const auto& key : order) os << eval::render_ratio_tables(groups[key]) << '\n';
  if (!manifest.value("failed_origins", json::array()).empty()) {
    os << "Failed origins:\n";
    for (const auto& f : manifest["failed_origins"]) os << "  " << f.get<std::string>() << '\n';
  }
  write_text(run_dir / "report.txt", os.str());
  return os.str();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace qbvar::experiment
