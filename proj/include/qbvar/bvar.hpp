#pragma once

#include <cstdint>

#include "qbvar/model.hpp"

/// Gaussian factor BVAR benchmark: same factor structure and horseshoe prior
/// as the QBVAR, conditional-mean likelihood with variances sigma_i.
namespace qbvar::bvar {

struct BvarConfig {
  int lags = 12;
  int factors = 1;  // 0 allowed: no common component
  model::Priors prior;
  model::McmcSchedule mcmc;
  std::uint64_t seed = 1;

  void validate() const;
};

/// The Phi, Lambda, factor and shrinkage blocks of the QBVAR with theta = 0 and tau2 z = 1, no
/// auxiliary step, and the conjugate IG(a + T/2, b + sum e^2 / 2) variance
/// update.
model::PosteriorDrawSet run_bvar_chain(const data::LagDesign& design, const BvarConfig& config);

}  // namespace qbvar::bvar
