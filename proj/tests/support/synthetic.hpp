#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbvar/date.hpp"
#include "qbvar/model.hpp"
#include "qbvar/rng.hpp"

// Data generators shared by the unit and acceptance tests.
namespace qbvar::testing {

// y_t = Phi x_t + Lambda f_t + theta z_t + eps_t, eps_t ~ N(0, tau2 diag(z_t) sigma),
// started from zero and returned without the initial row.
inline Eigen::MatrixXd simulate_mixture_var(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& lambda,
                                            const Eigen::VectorXd& sigma, double q, int t_obs, Rng& rng,
                                            int burn = 100) {
  const auto em = model::ErrorModel::quantile(q);
  const Eigen::Index n = phi.rows();
  const int p = static_cast<int>((phi.cols() - 1) / n);
  const int total = t_obs + burn + p;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(total, n);
  Eigen::VectorXd x(phi.cols());
  for (int t = p; t < total; ++t) {
    x(0) = 1.0;
    for (int j = 1; j <= p; ++j) x.segment(1 + (j - 1) * n, n) = y.row(t - j).transpose();
    Eigen::VectorXd f(lambda.cols());
    for (Eigen::Index k = 0; k < f.size(); ++k) f(k) = rng.normal();
    const Eigen::VectorXd mean = phi * x + lambda * f;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = rng.exponential();
      y(t, i) = mean(i) + em.theta * z + std::sqrt(em.tau2 * z * sigma(i)) * rng.normal();
    }
  }
  return y.bottomRows(t_obs + 1);
}

// Gaussian VAR(p): y_t = Phi x_t + Lambda f_t + diag(sqrt(sigma)) u_t.
inline Eigen::MatrixXd simulate_gaussian_var(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& lambda,
                                             const Eigen::VectorXd& sigma, int t_obs, Rng& rng, int burn = 100) {
  const Eigen::Index n = phi.rows();
  const int p = static_cast<int>((phi.cols() - 1) / n);
  const int total = t_obs + burn + p;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(total, n);
  Eigen::VectorXd x(phi.cols());
  for (int t = p; t < total; ++t) {
    x(0) = 1.0;
    for (int j = 1; j <= p; ++j) x.segment(1 + (j - 1) * n, n) = y.row(t - j).transpose();
    Eigen::VectorXd f(lambda.cols());
    for (Eigen::Index k = 0; k < f.size(); ++k) f(k) = rng.normal();
    Eigen::VectorXd mean = phi * x + lambda * f;
    for (Eigen::Index i = 0; i < n; ++i) y(t, i) = mean(i) + std::sqrt(sigma(i)) * rng.normal();
  }
  return y.bottomRows(t_obs + 1);
}

// Writes a raw level panel whose log-differences are the columns of `growth`
// (tcode 5 for every series), starting at `first` with level 100.
inline void write_level_panel(const std::filesystem::path& csv, const std::filesystem::path& tcodes,
                              const Eigen::MatrixXd& growth, const std::vector<std::string>& names,
                              const YearMonth& first) {
  std::ofstream out(csv);
  out.precision(17);
  out << "date";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  Eigen::VectorXd level = Eigen::VectorXd::Constant(growth.cols(), 100.0);
  out << first.str();
  for (Eigen::Index i = 0; i < level.size(); ++i) out << ',' << level(i);
  out << '\n';
  for (Eigen::Index t = 0; t < growth.rows(); ++t) {
    level = (level.array().log() + growth.row(t).transpose().array()).exp();
    out << first.plus_months(static_cast<int>(t) + 1).str();
    for (Eigen::Index i = 0; i < level.size(); ++i) out << ',' << level(i);
    out << '\n';
  }
  std::ofstream tc(tcodes);
  tc << '{';
  for (std::size_t i = 0; i < names.size(); ++i) tc << (i ? "," : "") << '"' << names[i] << "\":5";
  tc << "}\n";
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qbvar_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace qbvar::testing
