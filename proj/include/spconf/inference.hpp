#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "spconf/estimators.hpp"
#include "spconf/geometry.hpp"
#include "spconf/kernels.hpp"
#include "spconf/linalg.hpp"
#include "spconf/rng.hpp"

namespace spconf {

enum class IntervalMethod { Analytic, ParametricBootstrap, Subsample };

IntervalMethod parse_interval_method(std::string_view id);
std::string_view to_string(IntervalMethod method) noexcept;

struct IntervalSpec {
  double level = 0.95;
  IntervalMethod method = IntervalMethod::Analytic;
  int replicates = 200;
  double subsample_fraction = 1.0 / 20.0;
  /// Subsample only: draw whole groups instead of rows when the data carry group ids.
  bool subsample_groups = false;
  /// Bootstrap only: normal-theory interval from the replicate sd instead of percentiles.
  bool normal_theory = false;

  void validate() const;
};

/// beta_hat +/- z * se. Throws InvalidArgument when the fit carries no SE.
std::pair<double, double> analytic_ci(const FitResult& fit, double level = 0.95);

struct ResampleResult {
  double se = 0.0;
  std::pair<double, double> ci;
  std::vector<double> estimates;
};

/// Index of the lower percentile order statistic; the upper one is B - 1 - index.
std::size_t percentile_index(std::size_t count, double level);

/// Residuals Y - X b are whitened with the fitted covariance, centred, resampled
/// with replacement, recoloured and added back to X b; GLS under the same
/// covariance is refitted on each of the B responses.
ResampleResult parametric_spatial_bootstrap(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& coefficients, const CovarianceFactor& fitted,
                                            int replicates, RngStream rng, double level = 0.95,
                                            bool normal_theory = false);

/// Same, assembling the factor from fitted kernel parameters on the locations.
ResampleResult parametric_spatial_bootstrap(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            const LocationSet& locations, const FitResult& fit, int replicates,
                                            RngStream rng, double level = 0.95, bool normal_theory = false);

/// Estimator evaluated on a subset of rows (indices into the full data).
using SubsetEstimator = std::function<double(const std::vector<Eigen::Index>& rows)>;

/// Refits on `reps` random subsets of about fraction * n rows, drawn without
/// replacement; whole groups are drawn when groups are given. SE is the sd of
/// the subset estimates times sqrt(b / n); the interval is normal-theory
/// around beta_hat.
ResampleResult subsample_se(const SubsetEstimator& estimator, Eigen::Index n,
                            const std::optional<std::vector<std::int64_t>>& groups, double beta_hat,
                            double fraction, int reps, RngStream rng, double level = 0.95);

}  // namespace spconf
