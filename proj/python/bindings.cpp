#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qbvar/bvar.hpp"
#include "qbvar/combine.hpp"
#include "qbvar/dist.hpp"
#include "qbvar/error.hpp"
#include "qbvar/eval.hpp"
#include "qbvar/experiment.hpp"
#include "qbvar/forecast.hpp"
#include "qbvar/model.hpp"

namespace py = pybind11;
using namespace qbvar;

namespace {

model::McmcSchedule schedule(int iterations, int burn_in, int thin) {
  model::McmcSchedule s;
  s.iterations = iterations;
  s.burn_in = burn_in;
  s.thin = thin;
  return s;
}

model::SigmaUpdate sigma_update_from(const std::string& name) {
  if (name == "conjugate") return model::SigmaUpdate::Conjugate;
  if (name == "printed") return model::SigmaUpdate::Printed;
  throw InvalidArgument("sigma_update must be 'conjugate' or 'printed'");
}

// (draws, n, k) array of one parameter block.
template <typename Get>
py::array_t<double> stack(const model::PosteriorDrawSet& set, Get get) {
  if (set.draws.empty()) return py::array_t<double>(std::vector<py::ssize_t>{0, 0, 0});
  const Eigen::MatrixXd& first = get(set.draws.front());
  py::array_t<double> out({static_cast<py::ssize_t>(set.size()), static_cast<py::ssize_t>(first.rows()),
                           static_cast<py::ssize_t>(first.cols())});
  auto view = out.mutable_unchecked<3>();
  for (std::size_t s = 0; s < set.size(); ++s) {
    const Eigen::MatrixXd& m = get(set.draws[s]);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) view(static_cast<py::ssize_t>(s), i, j) = m(i, j);
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_qbvar, m) {
  m.doc() = "Quantile Bayesian VAR sampler, forecasts, scores and combinations";
  m.attr("__version__") = experiment::kVersion;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("mixture_constants", [](double q) {
    const model::QuantileLevel l(q);
    return py::make_tuple(l.theta, l.tau2);
  }, py::arg("q"), "(theta, tau2) of the asymmetric Laplace mixture at level q.");

  m.def("pinball", py::vectorize(&eval::pinball), py::arg("u"), py::arg("q"));

  m.def("draw_gig", [](double p, double a, double b, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    const dist::GigParams params{p, a, b};
    params.validate();
    std::vector<double> out(count);
    for (auto& x : out) x = dist::draw_gig(params, rng);
    return py::array_t<double>(static_cast<py::ssize_t>(out.size()), out.data());
  }, py::arg("p"), py::arg("a"), py::arg("b"), py::arg("count"), py::arg("seed") = 1,
        "Draws from the density proportional to x^(p-1) exp(-(a/x + b x)/2).");

  m.def("simulate_mixture", [](double q, double sigma, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    const auto v = model::simulate_mixture(q, sigma, count, rng);
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
  }, py::arg("q"), py::arg("sigma"), py::arg("count"), py::arg("seed") = 1);

  py::class_<model::PosteriorDrawSet>(m, "PosteriorDraws")
      .def("__len__", &model::PosteriorDrawSet::size)
      .def_readonly("quantile", &model::PosteriorDrawSet::quantile)
      .def_readonly("lags", &model::PosteriorDrawSet::lags)
      .def_readonly("factors", &model::PosteriorDrawSet::factors)
      .def_readonly("seed", &model::PosteriorDrawSet::seed)
      .def_property_readonly("gaussian", [](const model::PosteriorDrawSet& s) {
        return s.likelihood == model::Likelihood::Gaussian;
      })
      .def_property_readonly("phi", [](const model::PosteriorDrawSet& s) {
        return stack(s, [](const model::Draw& d) -> const Eigen::MatrixXd& { return d.phi; });
      })
      .def_property_readonly("lambda_", [](const model::PosteriorDrawSet& s) {
        return stack(s, [](const model::Draw& d) -> const Eigen::MatrixXd& { return d.lambda; });
      })
      .def_property_readonly("sigma", [](const model::PosteriorDrawSet& s) {
        Eigen::MatrixXd out(s.size(), s.variables());
        for (std::size_t i = 0; i < s.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = s.draws[i].sigma.transpose();
        return out;
      })
      .def("median_phi", &model::PosteriorDrawSet::median_phi);

  m.def("run_chain", [](const Eigen::MatrixXd& y, double quantile, int lags, int factors, int iterations, int burn_in,
                        int thin, std::uint64_t seed, const std::string& sigma_update) {
    model::QbvarConfig c;
    c.quantile = quantile;
    c.lags = lags;
    c.factors = factors;
    c.mcmc = schedule(iterations, burn_in, thin);
    c.seed = seed;
    c.prior.sigma_update = sigma_update_from(sigma_update);
    const auto design = data::build_lag_design(y, lags);
    py::gil_scoped_release release;
    return model::run_chain(design, c);
  }, py::arg("y"), py::arg("quantile"), py::arg("lags") = 4, py::arg("factors") = 1, py::arg("iterations") = 3000,
        py::arg("burn_in") = 1000, py::arg("thin") = 5, py::arg("seed") = 1, py::arg("sigma_update") = "conjugate",
        "QBVAR Gibbs chain on a (T + lags) x n array of transformed data.");

  m.def("run_bvar_chain", [](const Eigen::MatrixXd& y, int lags, int factors, int iterations, int burn_in, int thin,
                             std::uint64_t seed) {
    bvar::BvarConfig c;
    c.lags = lags;
    c.factors = factors;
    c.mcmc = schedule(iterations, burn_in, thin);
    c.seed = seed;
    const auto design = data::build_lag_design(y, lags);
    py::gil_scoped_release release;
    return bvar::run_bvar_chain(design, c);
  }, py::arg("y"), py::arg("lags") = 12, py::arg("factors") = 1, py::arg("iterations") = 3000,
        py::arg("burn_in") = 1000, py::arg("thin") = 5, py::arg("seed") = 1);

  m.def("simulate_paths", [](const model::PosteriorDrawSet& draws, const Eigen::MatrixXd& history, int horizon,
                             std::uint64_t seed) {
    Rng rng(seed);
    const auto paths = forecast::simulate_paths(draws, history, horizon, rng);
    py::array_t<double> out({static_cast<py::ssize_t>(paths.paths.size()), static_cast<py::ssize_t>(horizon),
                             static_cast<py::ssize_t>(history.cols())});
    auto view = out.mutable_unchecked<3>();
    for (std::size_t s = 0; s < paths.paths.size(); ++s) {
      for (Eigen::Index h = 0; h < horizon; ++h) {
        for (Eigen::Index i = 0; i < history.cols(); ++i) view(static_cast<py::ssize_t>(s), h, i) = paths.paths[s](h, i);
      }
    }
    return out;
  }, py::arg("draws"), py::arg("history"), py::arg("horizon"), py::arg("seed") = 1,
        "Predictive paths as a (draws, horizon, n) array.");

  m.def("empirical_quantile", &forecast::empirical_quantile, py::arg("values"), py::arg("q"));

  m.def("performance_weight", [](const std::vector<double>& qbvar_losses, const std::vector<double>& benchmark_losses,
                                 std::size_t window) {
    return combine::performance_weight(qbvar_losses, benchmark_losses, window).lambda;
  }, py::arg("qbvar_losses"), py::arg("benchmark_losses"), py::arg("window"));

  m.def("optimal_weight", [](const std::vector<double>& qbvar_fc, const std::vector<double>& benchmark_fc,
                             const std::vector<double>& realized, double q, std::size_t window) {
    return combine::optimal_weight(qbvar_fc, benchmark_fc, realized, q, window).lambda;
  }, py::arg("qbvar_fc"), py::arg("benchmark_fc"), py::arg("realized"), py::arg("q"), py::arg("window"));

  m.def("combined_loss", [](const std::vector<double>& qbvar_fc, const std::vector<double>& benchmark_fc,
                            const std::vector<double>& realized, double q, double lambda) {
    return combine::combined_loss(qbvar_fc, benchmark_fc, realized, q, lambda);
  }, py::arg("qbvar_fc"), py::arg("benchmark_fc"), py::arg("realized"), py::arg("q"), py::arg("lambda_"));

  m.def("run_experiment", [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> output_dir,
                             std::optional<int> threads) {
    auto config = experiment::ExperimentConfig::load(config_path);
    config.apply_environment();
    if (output_dir) config.output_dir = *output_dir;
    if (threads) config.threads = *threads;
    experiment::RunSummary summary;
    {
      py::gil_scoped_release release;
      summary = experiment::run_recursive(config);
    }
    py::dict out;
    std::vector<std::string> origins;
    for (const auto& o : summary.origins) origins.push_back(o.str());
    out["origins"] = origins;
    out["failed_origins"] = summary.failed_origins;
    std::vector<std::string> files;
    for (const auto& f : summary.files) files.push_back(f.string());
    out["files"] = files;
    out["output_dir"] = config.output_dir.string();
    return out;
  }, py::arg("config_path"), py::arg("output_dir") = py::none(), py::arg("threads") = py::none(),
        "Recursive out-of-sample experiment; returns origins, failures and written files.");

  m.def("report", [](const std::filesystem::path& run_dir) { return experiment::report(run_dir); },
        py::arg("run_dir"));
}
