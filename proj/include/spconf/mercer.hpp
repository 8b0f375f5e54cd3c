#pragma once

#include <Eigen/Dense>

#include "spconf/geometry.hpp"

namespace spconf {

inline constexpr int kMaxHermiteOrder = 10;

/// Closed-form Mercer eigensystem of exp(-(x - x')^2 / (2 l^2)) under N(0, sigma^2)
/// sampling, evaluated at a sample of locations.
struct EigenSystem {
  double location_sd = 1.0;
  double lengthscale = 1.0;
  // a^{-1} = 4 sigma^2, b^{-1} = 2 l^2, c = sqrt(a^2 + 2ab), A = a + b + c, B = b / A.
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double big_a = 0.0;
  double big_b = 0.0;
  /// lambda_k = sqrt(2a/A) B^k for k = 0..k_max.
  Eigen::VectorXd eigenvalues;
  /// n x (k_max + 1); column k has empirical mean square one.
  Eigen::MatrixXd phi;
  /// Factor each raw column was multiplied by.
  Eigen::VectorXd normalization;
  /// Number of terms kept; the expansion beyond it is truncated.
  int truncation = 0;

  [[nodiscard]] int k_max() const noexcept { return static_cast<int>(eigenvalues.size()) - 1; }
};

/// Physicists' Hermite polynomials H_0..H_order at x via the three-term recurrence.
Eigen::VectorXd hermite_polynomials(int order, double x);

/// Constants and eigenvalues only (no sample).
EigenSystem hermite_constants(double location_sd, double lengthscale, int k_max);

/// Requires Gaussian-line locations with the matching sd; 0 <= k_max <= 10.
EigenSystem hermite_eigensystem(double location_sd, double lengthscale, int k_max,
                                const LocationSet& locations);

/// (1/n) Phi (D + nugget I)^{-1} Phi^T v with D = diag(n lambda_k).
Eigen::VectorXd mercer_sigma_inverse_action(const EigenSystem& system, double nugget,
                                            const Eigen::VectorXd& v);

/// [sum_k c_g[k] c_h[k] / (n lambda_k + sigma0_2)] / denom, where denom = X^T Sigma^{-1} X / n.
double predicted_gls_bias(const Eigen::VectorXd& c_g, const Eigen::VectorXd& c_h,
                          const EigenSystem& system, double sigma0_2, double denom, Eigen::Index n);

}  // namespace spconf
