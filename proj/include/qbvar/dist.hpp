#pragma once

#include <Eigen/Dense>

#include "qbvar/rng.hpp"

/// Random-variate kernels used by the Gibbs samplers.
namespace qbvar::dist {

/// Smallest value an auxiliary draw or scale parameter is allowed to take.
inline constexpr double kUnderflowFloor = 1e-300;

/// Generalized inverse Gaussian with density proportional to
/// x^(p-1) exp(-(a/x + b x)/2) on x > 0.
struct GigParams {
  double p = 0.5;
  double a = 1.0;  // coefficient of 1/x
  double b = 1.0;  // coefficient of x

  /// Throws InvalidArgument unless b > 0, a >= 0 and (a > 0 or p > 0).
  void validate() const;
};

/// Hörmann & Leydold (2014) generator, valid over the whole parameter range.
/// Degenerates to Gamma(p, rate b/2) when `a` is numerically zero.
double draw_gig(const GigParams& params, Rng& rng);

/// Density proportional to x^(-shape-1) exp(-scale/x).
double draw_inverse_gamma(double shape, double scale, Rng& rng);

/// Gamma(shape, rate) restricted to (0, upper].
double draw_truncated_gamma(double shape, double rate, double upper, Rng& rng);

/// Cholesky factor of `m`, or of `m + jitter * I` if `m` is not numerically
/// positive definite. Jitter starts at 1e-10 times the mean diagonal and grows
/// by 10x up to 1e-6 before NumericError is thrown.
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m);

/// N(mean, covariance).
Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Rng& rng);

/// Gaussian posterior in information form: precision Q and linear term b,
/// so that mean = Q^{-1} b and covariance = Q^{-1}.
struct PrecisionForm {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;

  Eigen::VectorXd mean() const;
};

/// Draw from N(Q^{-1} b, Q^{-1}) without forming the inverse.
Eigen::VectorXd draw_mvn_precision(const PrecisionForm& form, Rng& rng);

struct HorseshoeScales {
  Eigen::VectorXd local;  // psi_j
  double global = 1.0;    // kappa
};

/// One slice-sampling sweep of the horseshoe hierarchy
///   beta_j ~ N(0, psi_j^2 kappa^2), psi_j ~ C+(0,1), kappa ~ C+(0,1)
/// given the coefficients. Works on eta = 1/psi^2 (and 1/kappa^2): a uniform
/// auxiliary bounds eta, after which eta is a truncated exponential (local)
/// or truncated gamma (global) draw.
HorseshoeScales update_horseshoe(const Eigen::VectorXd& coefficients, const HorseshoeScales& current,
                                 Rng& rng);

}  // namespace qbvar::dist
