#include "qbvar/bvar.hpp"

#include "qbvar/error.hpp"

namespace qbvar::bvar {

void BvarConfig::validate() const {
  if (lags < 1) throw InvalidArgument("lag order must be at least 1");
  if (factors < 0) throw InvalidArgument("factor count must be non-negative");
  if (!(prior.lambda_variance > 0.0) || !(prior.sigma_shape > 0.0) || !(prior.sigma_scale > 0.0)) {
    throw InvalidArgument("prior hyperparameters must be positive");
  }
  mcmc.validate();
}

model::PosteriorDrawSet run_bvar_chain(const data::LagDesign& design, const BvarConfig& config) {
  config.validate();
  if (design.lags != config.lags) throw InvalidArgument("design lag order differs from the configuration");
  auto out = model::run_gibbs(design, model::ErrorModel::gaussian(), config.factors, config.prior, config.mcmc,
                              config.seed);
  out.quantile = 0.5;
  return out;
}

}  // namespace qbvar::bvar
