#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spconf/geometry.hpp"

namespace spconf {

/// Low-rank thin-plate regression basis: [1, coords, radial terms at knots].
///
/// Radial terms are r^2 log r in 2-D and |r|^3 in 1-D. The penalty is the
/// (1/n)-scaled Gram matrix of the radial columns, zero on the polynomial block.
struct SplineBasis {
  Eigen::MatrixXd design;
  Eigen::MatrixXd knots;
  Eigen::MatrixXd penalty;
  Eigen::Index polynomial_columns = 0;

  [[nodiscard]] Eigen::Index rank() const noexcept { return design.cols(); }
};

struct PenalizedFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted;
  double hat_trace = 0.0;
  double rss = 0.0;
  double lambda = 0.0;
};

struct GcvSelection {
  double lambda = 0.0;
  PenalizedFit fit;
  std::vector<double> scores;  // aligned with the grid; NaN where undefined
};

/// Radial function of the thin-plate basis for dimension dim.
double thinplate_radial(double r, int dim);

/// Deterministic farthest-point traversal starting at row 0.
std::vector<Eigen::Index> farthest_point_knots(const Eigen::MatrixXd& coords, Eigen::Index count);

SplineBasis thinplate_basis(const LocationSet& locations, Eigen::Index rank);

/// The basis with its penalty padded by zero rows/columns for `extra` leading
/// unpenalized columns (e.g. exposures placed in front of the basis).
Eigen::MatrixXd padded_penalty(const SplineBasis& basis, Eigen::Index extra);

double gcv_score(double rss, Eigen::Index n, double hat_trace);

/// 40-point style log grid spanning [lo, hi] * n.
std::vector<double> lambda_grid(Eigen::Index n, double lo = 1e-8, double hi = 1e4, int len = 40);

/// Spectral form of min ||y - D c||^2 + lambda c^T S c for fixed (D, S); each
/// (y, lambda) evaluation then costs O(n p). Requires D of full column rank.
class PenalizedSpectrum {
 public:
  PenalizedSpectrum(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty);

  [[nodiscard]] PenalizedFit fit(const Eigen::VectorXd& y, double lambda) const;
  [[nodiscard]] double hat_trace(double lambda) const;
  /// (D^T D + lambda S)^{-1}.
  [[nodiscard]] Eigen::MatrixXd inverse_normal_matrix(double lambda) const;
  [[nodiscard]] GcvSelection select_gcv(const Eigen::VectorXd& y, const std::vector<double>& grid) const;

  /// Coordinates Q^T v in the orthonormal spectral basis of the design.
  [[nodiscard]] Eigen::MatrixXd rotate(const Eigen::MatrixXd& v) const { return q_.transpose() * v; }
  /// Shrinkage weights 1 / (1 + lambda * mu_j); the hat matrix is Q diag(w) Q^T.
  [[nodiscard]] Eigen::VectorXd shrinkage(double lambda) const;
  /// Maps weighted spectral coordinates back to basis coefficients.
  [[nodiscard]] const Eigen::MatrixXd& transform() const noexcept { return transform_; }

  [[nodiscard]] Eigen::Index rows() const noexcept { return q_.rows(); }
  [[nodiscard]] Eigen::Index cols() const noexcept { return q_.cols(); }

 private:
  Eigen::MatrixXd q_;          // n x p, orthonormal columns
  Eigen::MatrixXd transform_;  // p x p, maps spectral weights to coefficients
  Eigen::VectorXd penalty_eigenvalues_;
};

PenalizedFit penalized_fit(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty,
                           const Eigen::VectorXd& y, double lambda);
PenalizedFit penalized_fit(const SplineBasis& basis, const Eigen::VectorXd& y, double lambda);

GcvSelection select_lambda_gcv(const SplineBasis& basis, const Eigen::VectorXd& y,
                               const std::vector<double>& grid);

}  // namespace spconf
