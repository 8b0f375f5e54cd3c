#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>

#include "spconf/dgp.hpp"
#include "spconf/linalg.hpp"
#include "spconf/smoothers.hpp"

namespace spconf {

/// Conditional bias of GLS given X and the locations: the exposure coefficient
/// of (X^T S^{-1} X)^{-1} X^T S^{-1} g.
double exact_gls_bias(const Eigen::MatrixXd& x, const CovarianceFactor& factor, const Eigen::VectorXd& g);

struct BiasReport {
  double exact_bias = 0.0;
  std::optional<double> predicted_bias;
  std::optional<double> ols_asymptotic_bias;
  std::map<std::string, double> components;
};

/// Splits the realized GLS error beta_hat - beta (single exposure, no intercept)
/// into n-normalized quadratic forms of h, eta, g and eps:
///   numerator   = hg + eta_g + x_eps
///   denominator = hh + eta_eta + 2 h_eta
/// Requires h_true.
BiasReport gls_bias_decomposition(const SimulatedDataset& data, const CovarianceFactor& factor);

/// Sample cov(X, g) / var(X).
double ols_asymptotic_bias(const Eigen::VectorXd& x, const Eigen::VectorXd& g);

/// (1/n) h^T S^{-1} noise.
double cross_term_diag(const Eigen::VectorXd& h, const CovarianceFactor& factor, const Eigen::VectorXd& noise);

/// (1/n) eta^T S^{-1} eta.
double quadform_diag(const Eigen::VectorXd& eta, const CovarianceFactor& factor, double var_eta);

struct IdentifiabilityReport {
  bool identified = false;
  /// Smallest singular value of X after removing its projection on the basis span.
  double smallest_singular_value = 0.0;
  double residual_norm = 0.0;
  double x_norm = 0.0;
};

/// Degenerate when the smallest residual singular value is below tol * ||X||.
IdentifiabilityReport identifiability_check(const Eigen::MatrixXd& x, const SplineBasis& basis, double tol = 1e-8);
IdentifiabilityReport identifiability_check(const Eigen::MatrixXd& x, const Eigen::MatrixXd& basis, double tol = 1e-8);

}  // namespace spconf
