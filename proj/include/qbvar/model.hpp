#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qbvar/data.hpp"
#include "qbvar/dist.hpp"
#include "qbvar/rng.hpp"

/// Quantile Bayesian VAR with a factor error structure and horseshoe prior,
/// estimated through the normal/exponential mixture form of the asymmetric
/// Laplace likelihood. The Gaussian benchmark BVAR shares the same kernels.
namespace qbvar::model {

/// Quantile level with the mixture constants theta(q) = (1-2q)/(q(1-q)) and
/// tau2(q) = 2/(q(1-q)).
struct QuantileLevel {
  double q;
  double theta;
  double tau2;

  explicit QuantileLevel(double level);
};

enum class Likelihood : std::uint8_t { AsymmetricLaplace = 0, Gaussian = 1 };

/// Observation-error model as seen by the Gibbs steps. For the Gaussian
/// likelihood theta = 0, tau2 = 1 and the auxiliaries stay at 1.
struct ErrorModel {
  Likelihood kind = Likelihood::AsymmetricLaplace;
  double theta = 0.0;
  double tau2 = 8.0;

  static ErrorModel quantile(double q);
  static ErrorModel gaussian();
};

/// Scale update under the asymmetric Laplace likelihood.
///   Conjugate: IG(a + T/2, b + sum (e - theta z)^2 / (2 tau2 z)), the full
///              conditional of the mixture model.
///   Printed:   IG(a + T, b + sum e^2 / (2 tau2 z) + sum theta^2 z / (2 tau2)),
///              which drops the cross term and doubles the data contribution
///              to the shape.
enum class SigmaUpdate : std::uint8_t { Conjugate = 0, Printed = 1 };

struct Priors {
  double lambda_variance = 1.0;  // lambda_ij ~ N(0, V)
  double sigma_shape = 3.0;      // sigma_i ~ IG(a, b)
  double sigma_scale = 1.0;
  SigmaUpdate sigma_update = SigmaUpdate::Conjugate;
};

struct McmcSchedule {
  int iterations = 3000;
  int burn_in = 1000;
  int thin = 5;

  void validate() const;
  int saved_draws() const { return (iterations - burn_in) / thin; }
};

struct QbvarConfig {
  double quantile = 0.5;
  int lags = 4;
  int factors = 1;
  Priors prior;
  McmcSchedule mcmc;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Full sampler state for one model.
struct QbvarState {
  Eigen::MatrixXd phi;      // n x k
  Eigen::MatrixXd lambda;   // n x r
  Eigen::MatrixXd factors;  // T x r
  Eigen::MatrixXd z;        // T x n, > 0
  Eigen::VectorXd sigma;    // n, > 0
  Eigen::MatrixXd psi;      // n x k local shrinkage, > 0
  double kappa = 1.0;       // global shrinkage, > 0

  /// Throws InvalidArgument if dimensions disagree with `design` or any
  /// positivity constraint fails.
  void check(const data::LagDesign& design) const;
};

/// Retained parameters of one saved iteration.
struct Draw {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd lambda;
  Eigen::VectorXd sigma;

  /// Omega = Lambda Lambda' + diag(sigma).
  Eigen::MatrixXd covariance() const;
};

struct ChainDiagnostics {
  std::vector<double> residual_norm;  // Frobenius norm of y - X Phi' - F Lambda' per iteration
  Eigen::MatrixXd phi_mean_first_half;
  Eigen::MatrixXd phi_mean_second_half;
};

/// Thinned post-burn-in draws plus the settings that produced them.
struct PosteriorDrawSet {
  std::vector<Draw> draws;
  Likelihood likelihood = Likelihood::AsymmetricLaplace;
  double quantile = 0.5;
  int lags = 1;
  int factors = 1;
  Priors prior;
  McmcSchedule mcmc;
  std::uint64_t seed = 0;
  ChainDiagnostics diagnostics;

  std::size_t size() const { return draws.size(); }
  Eigen::Index variables() const { return draws.empty() ? 0 : draws.front().phi.rows(); }
  /// Elementwise posterior median of Phi.
  Eigen::MatrixXd median_phi() const;
};

/// Deterministic starting point: ridge (1e-4) least squares for Phi, residual
/// variances for sigma, Lambda = F = 0, z = 1, psi = kappa = 1.
QbvarState initial_state(const data::LagDesign& design, int factors);

/// Residuals y - X Phi' - F Lambda' (T x n).
Eigen::MatrixXd residuals(const QbvarState& state, const data::LagDesign& design);

// Full conditionals. The *_conditional functions expose the Gaussian
// posterior so that it can be checked against closed forms; the step_*
// functions draw from it and update the state in place.

dist::PrecisionForm phi_conditional(const QbvarState& state, const data::LagDesign& design, const ErrorModel& em,
                                    Eigen::Index equation);
void step_phi(QbvarState& state, const data::LagDesign& design, const ErrorModel& em, Rng& rng);

dist::PrecisionForm lambda_conditional(const QbvarState& state, const data::LagDesign& design, const ErrorModel& em,
                                       const Priors& prior, Eigen::Index equation);
void step_lambda(QbvarState& state, const data::LagDesign& design, const ErrorModel& em, const Priors& prior,
                 Rng& rng);

dist::PrecisionForm factor_conditional(const QbvarState& state, const data::LagDesign& design, const ErrorModel& em,
                                       Eigen::Index t);
void step_factors(QbvarState& state, const data::LagDesign& design, const ErrorModel& em, Rng& rng);

/// Lower bound applied to every auxiliary draw.
inline constexpr double kZFloor = 1e-12;

dist::GigParams z_conditional(double residual, double sigma, const ErrorModel& em);
/// No-op for the Gaussian likelihood.
void step_z(QbvarState& state, const data::LagDesign& design, const ErrorModel& em, Rng& rng);

struct InverseGammaParams {
  double shape;
  double scale;
};
InverseGammaParams sigma_conditional(const QbvarState& state, const data::LagDesign& design, const ErrorModel& em,
                                     const Priors& prior, Eigen::Index equation);
void step_sigma(QbvarState& state, const data::LagDesign& design, const ErrorModel& em, const Priors& prior,
                Rng& rng);

/// One horseshoe sweep over every Phi entry with a single shared kappa.
void step_shrinkage(QbvarState& state, Rng& rng);

/// Generic driver: steps 1-6 per iteration, thinned storage after burn-in.
PosteriorDrawSet run_gibbs(const data::LagDesign& design, const ErrorModel& em, int factors, const Priors& prior,
                           const McmcSchedule& mcmc, std::uint64_t seed);

/// QBVAR chain at config.quantile.
PosteriorDrawSet run_chain(const data::LagDesign& design, const QbvarConfig& config);

/// Draws of theta(q) z + eps with z ~ Exp(1), eps ~ N(0, tau2(q) z sigma).
std::vector<double> simulate_mixture(double q, double sigma, std::size_t count, Rng& rng);

}  // namespace qbvar::model
