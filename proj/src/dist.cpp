#include "qbvar/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "qbvar/error.hpp"

namespace qbvar::dist {

namespace {

// Below this, a GIG's 1/x coefficient is treated as zero (Gamma limit).
constexpr double kGigZeroTol = 10.0 * std::numeric_limits<double>::epsilon();

double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) {
    return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  }
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

// The three generators below sample the standardized density
//   x^(lambda-1) exp(-omega/2 (x + 1/x)),  lambda >= 0,
// the caller rescales by alpha = sqrt(a/b).

// Ratio-of-uniforms without mode shift.
double rou_noshift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms with mode shift; bounding rectangle from Cardano's rule.
double rou_shift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 && std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Rejection from a three-piece hat; covers the non-T-concave region
// (0 <= lambda < 1, small omega).
double rejection_small_omega(double lambda, double omega, Rng& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  area[0] = k0 * x0;
  double k1 = 0.0;
  double k2 = 0.0;
  if (x0 >= 2.0 / omega) {
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = lambda == 0.0 ? k1 * std::log(2.0 / (omega * omega))
                            : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];

  for (;;) {
    double v = total * rng.uniform();
    double x;
    double hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + lambda / k1 * v, 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double lo = std::max(x0, 2.0 / omega);
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

void GigParams::validate() const {
  if (!(b > 0.0) || !(a >= 0.0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(p)) {
    throw InvalidArgument("GIG requires a >= 0 and b > 0 (got a=" + std::to_string(a) +
                          ", b=" + std::to_string(b) + ")");
  }
  if (a == 0.0 && !(p > 0.0)) {
    throw InvalidArgument("GIG with a = 0 requires p > 0");
  }
}

double draw_gig(const GigParams& params, Rng& rng) {
  params.validate();
  if (params.a < kGigZeroTol) {
    if (params.p > 0.0) {
      return std::max(rng.standard_gamma(params.p) / (0.5 * params.b), kUnderflowFloor);
    }
    // p <= 0 with a tiny positive a: fall through to the general generator
  }

  const double lambda = std::abs(params.p);
  const double omega = std::sqrt(params.a * params.b);
  const double alpha = std::sqrt(params.a / params.b);

  double x;
  if (lambda > 2.0 || omega > 3.0) {
    x = rou_shift(lambda, omega, rng);
  } else if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) {
    x = rou_noshift(lambda, omega, rng);
  } else {
    x = rejection_small_omega(lambda, omega, rng);
  }
  // X ~ GIG(-p, b, a)  <=>  1/X ~ GIG(p, a, b)
  const double draw = params.p < 0.0 ? alpha / x : alpha * x;
  return std::max(draw, kUnderflowFloor);
}

double draw_inverse_gamma(double shape, double scale, Rng& rng) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw InvalidArgument("inverse-gamma requires shape > 0 and scale > 0");
  }
  const double g = std::max(rng.standard_gamma(shape), kUnderflowFloor);
  return std::max(scale / g, kUnderflowFloor);
}

double draw_truncated_gamma(double shape, double rate, double upper, Rng& rng) {
  if (!(shape > 0.0) || !(rate >= 0.0) || !(upper > 0.0)) {
    throw InvalidArgument("truncated gamma requires shape > 0, rate >= 0, upper > 0");
  }
  if (!std::isfinite(upper)) {
    return std::max(rng.standard_gamma(shape) / rate, kUnderflowFloor);
  }
  const double x_upper = rate * upper;
  const double cdf_upper = x_upper > 0.0 ? boost::math::gamma_p(shape, x_upper) : 0.0;
  if (cdf_upper < 1e-280) {
    // density is ~ x^(shape-1) on (0, upper]
    return std::max(upper * std::pow(rng.uniform(), 1.0 / shape), kUnderflowFloor);
  }
  const double target = rng.uniform() * cdf_upper;
  const double x = boost::math::gamma_p_inv(shape, target) / rate;
  return std::clamp(x, kUnderflowFloor, upper);
}

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw InvalidArgument("factor_spd: matrix is not square");
  {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) return llt;
  }
  double scale = n > 0 ? m.diagonal().mean() : 1.0;
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  for (double rel = 1e-10; rel <= 1e-6 * 1.0000001; rel *= 10.0) {
    Eigen::MatrixXd jittered = m;
    jittered.diagonal().array() += rel * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) return llt;
  }
  throw NumericError("Cholesky factorization failed after maximum jitter");
}

Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Rng& rng) {
  if (covariance.rows() != mean.size()) throw InvalidArgument("draw_mvn: dimension mismatch");
  const auto llt = factor_spd(covariance);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + llt.matrixL() * z;
}

Eigen::VectorXd PrecisionForm::mean() const { return factor_spd(precision).solve(linear); }

Eigen::VectorXd draw_mvn_precision(const PrecisionForm& form, Rng& rng) {
  if (form.precision.rows() != form.linear.size()) {
    throw InvalidArgument("draw_mvn_precision: dimension mismatch");
  }
  const auto llt = factor_spd(form.precision);
  Eigen::VectorXd z(form.linear.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  // Q = L L'  =>  L'^{-1} z ~ N(0, Q^{-1})
  Eigen::VectorXd draw = llt.solve(form.linear);
  draw += llt.matrixU().solve(z);
  return draw;
}

HorseshoeScales update_horseshoe(const Eigen::VectorXd& coefficients, const HorseshoeScales& current,
                                 Rng& rng) {
  const Eigen::Index k = coefficients.size();
  if (current.local.size() != k) throw InvalidArgument("update_horseshoe: dimension mismatch");

  HorseshoeScales next;
  next.local.resize(k);
  const double kappa2 = std::max(current.global * current.global, kUnderflowFloor);

  // local: p(eta | .) ∝ exp(-mu eta) / (1 + eta),  mu = beta^2 / (2 kappa^2)
  Eigen::VectorXd eta(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double psi = std::max(current.local(j), 1e-150);
    const double eta_old = 1.0 / (psi * psi);
    const double u = rng.uniform() / (1.0 + eta_old);
    const double upper = (1.0 - u) / u;
    const double mu = coefficients(j) * coefficients(j) / (2.0 * kappa2);
    double e;
    if (mu * upper < 1e-12) {
      e = rng.uniform() * upper;
    } else {
      e = -std::log1p(rng.uniform() * std::expm1(-mu * upper)) / mu;
    }
    eta(j) = std::clamp(e, kUnderflowFloor, upper);
    next.local(j) = std::max(1.0 / std::sqrt(eta(j)), kUnderflowFloor);
  }

  // global: p(eta | .) ∝ eta^((k-1)/2) exp(-mu eta) / (1 + eta)
  const double eta_g_old = 1.0 / kappa2;
  const double u = rng.uniform() / (1.0 + eta_g_old);
  const double upper = (1.0 - u) / u;
  const double mu = 0.5 * (coefficients.array().square() * eta.array()).sum();
  const double eta_g = draw_truncated_gamma(0.5 * (static_cast<double>(k) + 1.0), mu, upper, rng);
  next.global = std::max(1.0 / std::sqrt(eta_g), kUnderflowFloor);
  return next;
}

}  // namespace qbvar::dist
