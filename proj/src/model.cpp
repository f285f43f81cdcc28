#include "qbvar/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qbvar/error.hpp"

namespace qbvar::model {

namespace {

constexpr double kRidge = 1e-4;
// bounds on prior variances psi^2 kappa^2 so their reciprocals stay finite
constexpr double kMinPriorVariance = 1e-300;

double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// 1 / (tau2 sigma_i z_ti) for every t
Eigen::VectorXd equation_weights(const QbvarState& s, const ErrorModel& em, Eigen::Index i) {
  return (em.tau2 * s.sigma(i) * s.z.col(i).array()).inverse().matrix();
}

}  // namespace

QuantileLevel::QuantileLevel(double level) : q(level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("quantile level must lie in (0, 1), got " + std::to_string(level));
  }
  theta = (1.0 - 2.0 * q) / (q * (1.0 - q));
  tau2 = 2.0 / (q * (1.0 - q));
}

ErrorModel ErrorModel::quantile(double q) {
  QuantileLevel level(q);
  return ErrorModel{Likelihood::AsymmetricLaplace, level.theta, level.tau2};
}

ErrorModel ErrorModel::gaussian() { return ErrorModel{Likelihood::Gaussian, 0.0, 1.0}; }

void McmcSchedule::validate() const {
  if (iterations <= burn_in) throw InvalidArgument("MCMC iterations must exceed burn-in");
  if (burn_in < 0) throw InvalidArgument("MCMC burn-in must be non-negative");
  if (thin < 1) throw InvalidArgument("MCMC thinning must be at least 1");
  if (saved_draws() < 1) throw InvalidArgument("MCMC schedule keeps no draws");
}

void QbvarConfig::validate() const {
  QuantileLevel check(quantile);
  (void)check;
  if (lags < 1) throw InvalidArgument("lag order must be at least 1");
  if (factors < 1) throw InvalidArgument("QBVAR needs at least one factor");
  if (!(prior.lambda_variance > 0.0) || !(prior.sigma_shape > 0.0) || !(prior.sigma_scale > 0.0)) {
    throw InvalidArgument("prior hyperparameters must be positive");
  }
  mcmc.validate();
}

void QbvarState::check(const data::LagDesign& design) const {
  const Eigen::Index t = design.observations();
  const Eigen::Index n = design.variables();
  const Eigen::Index k = design.regressors();
  const Eigen::Index r = lambda.cols();
  if (phi.rows() != n || phi.cols() != k || lambda.rows() != n || factors.rows() != t || factors.cols() != r ||
      z.rows() != t || z.cols() != n || sigma.size() != n || psi.rows() != n || psi.cols() != k) {
    throw InvalidArgument("sampler state dimensions do not match the design");
  }
  if (!((z.array() > 0.0).all() && (sigma.array() > 0.0).all() && (psi.array() > 0.0).all() && kappa > 0.0)) {
    throw InvalidArgument("sampler state violates positivity constraints");
  }
}

Eigen::MatrixXd Draw::covariance() const {
  Eigen::MatrixXd omega = lambda * lambda.transpose();
  omega.diagonal() += sigma;
  return omega;
}

Eigen::MatrixXd PosteriorDrawSet::median_phi() const {
  if (draws.empty()) throw InvalidArgument("median_phi: no draws");
  const auto& first = draws.front().phi;
  Eigen::MatrixXd out(first.rows(), first.cols());
  std::vector<double> buf(draws.size());
  for (Eigen::Index i = 0; i < first.rows(); ++i) {
    for (Eigen::Index j = 0; j < first.cols(); ++j) {
      for (std::size_t s = 0; s < draws.size(); ++s) buf[s] = draws[s].phi(i, j);
      out(i, j) = median_of(buf);
    }
  }
  return out;
}

QbvarState initial_state(const data::LagDesign& design, int factors) {
  const Eigen::Index t = design.observations();
  const Eigen::Index n = design.variables();
  const Eigen::Index k = design.regressors();
  if (factors < 0) throw InvalidArgument("factor count must be non-negative");

  Eigen::MatrixXd gram = design.x.transpose() * design.x;
  gram.diagonal().array() += kRidge;
  const Eigen::MatrixXd coef = gram.llt().solve(design.x.transpose() * design.y);  // k x n

  QbvarState s;
  s.phi = coef.transpose();
  const Eigen::MatrixXd resid = design.y - design.x * coef;
  s.sigma = (resid.array().square().colwise().sum() / static_cast<double>(t)).transpose();
  s.sigma = s.sigma.cwiseMax(1e-12);
  s.lambda = Eigen::MatrixXd::Zero(n, factors);
  s.factors = Eigen::MatrixXd::Zero(t, factors);
  s.z = Eigen::MatrixXd::Ones(t, n);
  s.psi = Eigen::MatrixXd::Ones(n, k);
  s.kappa = 1.0;
  return s;
}

Eigen::MatrixXd residuals(const QbvarState& s, const data::LagDesign& design) {
  return design.y - design.x * s.phi.transpose() - s.factors * s.lambda.transpose();
}

dist::PrecisionForm phi_conditional(const QbvarState& s, const data::LagDesign& design, const ErrorModel& em,
                                    Eigen::Index i) {
  const Eigen::VectorXd w = equation_weights(s, em, i);
  const Eigen::VectorXd target = design.y.col(i) - s.factors * s.lambda.row(i).transpose() - em.theta * s.z.col(i);
  const Eigen::MatrixXd wx = design.x.array().colwise() * w.array();

  dist::PrecisionForm form;
  form.precision = design.x.transpose() * wx;
  const double kappa2 = s.kappa * s.kappa;
  for (Eigen::Index j = 0; j < design.regressors(); ++j) {
    const double prior_var = std::max(s.psi(i, j) * s.psi(i, j) * kappa2, kMinPriorVariance);
    form.precision(j, j) += 1.0 / prior_var;
  }
  form.linear = wx.transpose() * target;
  return form;
}

void step_phi(QbvarState& s, const data::LagDesign& design, const ErrorModel& em, Rng& rng) {
  for (Eigen::Index i = 0; i < design.variables(); ++i) {
    s.phi.row(i) = dist::draw_mvn_precision(phi_conditional(s, design, em, i), rng).transpose();
  }
}

dist::PrecisionForm lambda_conditional(const QbvarState& s, const data::LagDesign& design, const ErrorModel& em,
                                       const Priors& prior, Eigen::Index i) {
  const Eigen::VectorXd w = equation_weights(s, em, i);
  const Eigen::VectorXd target = design.y.col(i) - design.x * s.phi.row(i).transpose() - em.theta * s.z.col(i);
  const Eigen::MatrixXd wf = s.factors.array().colwise() * w.array();

  dist::PrecisionForm form;
  form.precision = s.factors.transpose() * wf;
  form.precision.diagonal().array() += 1.0 / prior.lambda_variance;
  form.linear = wf.transpose() * target;
  return form;
}

void step_lambda(QbvarState& s, const data::LagDesign& design, const ErrorModel& em, const Priors& prior, Rng& rng) {
  if (s.lambda.cols() == 0) return;
  for (Eigen::Index i = 0; i < design.variables(); ++i) {
    s.lambda.row(i) = dist::draw_mvn_precision(lambda_conditional(s, design, em, prior, i), rng).transpose();
  }
}

dist::PrecisionForm factor_conditional(const QbvarState& s, const data::LagDesign& design, const ErrorModel& em,
                                       Eigen::Index t) {
  const Eigen::VectorXd target = design.y.row(t).transpose() - s.phi * design.x.row(t).transpose() -
                                 em.theta * s.z.row(t).transpose();
  const Eigen::ArrayXd w = (em.tau2 * s.sigma.array() * s.z.row(t).transpose().array()).inverse();
  const Eigen::MatrixXd wl = s.lambda.array().colwise() * w;

  dist::PrecisionForm form;
  form.precision = s.lambda.transpose() * wl;
  form.precision.diagonal().array() += 1.0;
  form.linear = wl.transpose() * target;
  return form;
}

void step_factors(QbvarState& s, const data::LagDesign& design, const ErrorModel& em, Rng& rng) {
  const Eigen::Index r = s.lambda.cols();
  if (r == 0) return;
  if (r > 1) {
    for (Eigen::Index t = 0; t < design.observations(); ++t) {
      s.factors.row(t) = dist::draw_mvn_precision(factor_conditional(s, design, em, t), rng).transpose();
    }
    return;
  }
  // single factor: scalar form of the same conditional
  const Eigen::MatrixXd fitted = design.x * s.phi.transpose();
  const Eigen::VectorXd lam = s.lambda.col(0);
  for (Eigen::Index t = 0; t < design.observations(); ++t) {
    double precision = 1.0;
    double linear = 0.0;
    for (Eigen::Index i = 0; i < design.variables(); ++i) {
      const double w = 1.0 / (em.tau2 * s.sigma(i) * s.z(t, i));
      const double target = design.y(t, i) - fitted(t, i) - em.theta * s.z(t, i);
      precision += lam(i) * lam(i) * w;
      linear += lam(i) * w * target;
    }
    s.factors(t, 0) = linear / precision + rng.normal() / std::sqrt(precision);
  }
}

dist::GigParams z_conditional(double residual, double sigma, const ErrorModel& em) {
  const double denom = em.tau2 * sigma;
  return dist::GigParams{0.5, residual * residual / denom, em.theta * em.theta / denom + 2.0};
}

void step_z(QbvarState& s, const data::LagDesign& design, const ErrorModel& em, Rng& rng) {
  if (em.kind == Likelihood::Gaussian) return;
  const Eigen::MatrixXd e = residuals(s, design);
  for (Eigen::Index i = 0; i < design.variables(); ++i) {
    for (Eigen::Index t = 0; t < design.observations(); ++t) {
      s.z(t, i) = std::max(dist::draw_gig(z_conditional(e(t, i), s.sigma(i), em), rng), kZFloor);
    }
  }
}

InverseGammaParams sigma_conditional(const QbvarState& s, const data::LagDesign& design, const ErrorModel& em,
                                     const Priors& prior, Eigen::Index i) {
  const Eigen::VectorXd e = residuals(s, design).col(i);
  const double t = static_cast<double>(design.observations());
  if (em.kind == Likelihood::Gaussian) {
    return {prior.sigma_shape + 0.5 * t, prior.sigma_scale + 0.5 * e.squaredNorm()};
  }
  const auto z = s.z.col(i).array();
  if (prior.sigma_update == SigmaUpdate::Printed) {
    const double quad = (e.array().square() / z).sum() / (2.0 * em.tau2);
    const double shift = em.theta * em.theta * z.sum() / (2.0 * em.tau2);
    return {prior.sigma_shape + t, prior.sigma_scale + quad + shift};
  }
  const double quad = ((e.array() - em.theta * z).square() / z).sum() / (2.0 * em.tau2);
  return {prior.sigma_shape + 0.5 * t, prior.sigma_scale + quad};
}

void step_sigma(QbvarState& s, const data::LagDesign& design, const ErrorModel& em, const Priors& prior, Rng& rng) {
  for (Eigen::Index i = 0; i < design.variables(); ++i) {
    const auto ig = sigma_conditional(s, design, em, prior, i);
    s.sigma(i) = dist::draw_inverse_gamma(ig.shape, ig.scale, rng);
  }
}

void step_shrinkage(QbvarState& s, Rng& rng) {
  const Eigen::Index n = s.phi.rows();
  const Eigen::Index k = s.phi.cols();
  // column-major flattening of both matrices keeps entries paired
  dist::HorseshoeScales current{Eigen::Map<const Eigen::VectorXd>(s.psi.data(), n * k), s.kappa};
  const auto next =
      dist::update_horseshoe(Eigen::Map<const Eigen::VectorXd>(s.phi.data(), n * k), current, rng);
  s.psi = Eigen::Map<const Eigen::MatrixXd>(next.local.data(), n, k);
  s.kappa = next.global;
}

PosteriorDrawSet run_gibbs(const data::LagDesign& design, const ErrorModel& em, int factors, const Priors& prior,
                           const McmcSchedule& mcmc, std::uint64_t seed) {
  mcmc.validate();
  if (design.observations() < 1) throw InvalidArgument("design has no observations");

  Rng rng(seed);
  QbvarState s = initial_state(design, factors);

  PosteriorDrawSet out;
  out.likelihood = em.kind;
  out.factors = factors;
  out.lags = design.lags;
  out.prior = prior;
  out.mcmc = mcmc;
  out.seed = seed;
  out.draws.reserve(static_cast<std::size_t>(mcmc.saved_draws()));
  out.diagnostics.residual_norm.reserve(static_cast<std::size_t>(mcmc.iterations));

  for (int it = 1; it <= mcmc.iterations; ++it) {
    try {
      step_phi(s, design, em, rng);
      step_lambda(s, design, em, prior, rng);
      step_factors(s, design, em, rng);
      step_z(s, design, em, rng);
      step_sigma(s, design, em, prior, rng);
      step_shrinkage(s, rng);
    } catch (const NumericError& e) {
      throw NumericError("Gibbs iteration " + std::to_string(it) + ": " + e.what());
    }
    const double norm = residuals(s, design).norm();
    if (!std::isfinite(norm)) {
      throw NumericError("Gibbs iteration " + std::to_string(it) + ": non-finite residuals");
    }
    out.diagnostics.residual_norm.push_back(norm);
    if (it > mcmc.burn_in && (it - mcmc.burn_in) % mcmc.thin == 0) {
      out.draws.push_back(Draw{s.phi, s.lambda, s.sigma});
    }
  }

  const std::size_t half = out.draws.size() / 2;
  auto mean_phi = [&](std::size_t from, std::size_t to) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(s.phi.rows(), s.phi.cols());
    for (std::size_t d = from; d < to; ++d) m += out.draws[d].phi;
    return to > from ? Eigen::MatrixXd(m / static_cast<double>(to - from)) : m;
  };
  out.diagnostics.phi_mean_first_half = mean_phi(0, half);
  out.diagnostics.phi_mean_second_half = mean_phi(half, out.draws.size());
  return out;
}

PosteriorDrawSet run_chain(const data::LagDesign& design, const QbvarConfig& config) {
  config.validate();
  if (design.lags != config.lags) throw InvalidArgument("design lag order differs from the configuration");
  auto out = run_gibbs(design, ErrorModel::quantile(config.quantile), config.factors, config.prior, config.mcmc,
                       config.seed);
  out.quantile = config.quantile;
  out.lags = config.lags;
  return out;
}

std::vector<double> simulate_mixture(double q, double sigma, std::size_t count, Rng& rng) {
  const QuantileLevel level(q);
  if (!(sigma > 0.0)) throw InvalidArgument("mixture scale must be positive");
  std::vector<double> out(count);
  for (auto& v : out) {
    const double z = rng.exponential();
    v = level.theta * z + std::sqrt(level.tau2 * z * sigma) * rng.normal();
  }
  return out;
}

}  // namespace qbvar::model
