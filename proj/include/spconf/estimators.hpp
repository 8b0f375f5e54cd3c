#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spconf/geometry.hpp"
#include "spconf/kernels.hpp"
#include "spconf/linalg.hpp"
#include "spconf/optimize.hpp"
#include "spconf/smoothers.hpp"

namespace spconf {

enum class Method {
  Ols,
  Rsr,
  GlsKnown,
  GlsProfile,
  GlsVecchia,
  GpRidge,
  Gam,
  GamFx,
  SpatialPlus,
  GroupedRe,
};

/// Config identifiers: "ols", "rsr", "gls_known", ... "grouped_re".
Method parse_method(std::string_view id);
std::string_view to_string(Method method) noexcept;

/// Uniform estimator output. The exposure is always column 0 of the design and
/// beta_hat is its coefficient; `coefficients` holds the full vector.
struct FitResult {
  Method method = Method::Ols;
  double beta_hat = 0.0;
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci;
  std::optional<KernelSpec> cov_params;
  Eigen::VectorXd coefficients;
  std::map<std::string, double> diagnostics;
};

/// Design [x, 1] used by the intercept-bearing scenarios.
Eigen::MatrixXd design_with_intercept(const Eigen::VectorXd& x);

FitResult fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Restricted spatial regression: y on [x, (I - P_x) B]. Basis columns that are
/// rank deficient after projection are dropped (count in diagnostics).
FitResult fit_rsr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& basis);
FitResult fit_rsr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SplineBasis& basis);

/// (X^T S^{-1} X)^{-1} X^T S^{-1} y with model-based standard error.
FitResult fit_gls_known(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CovarianceFactor& factor);

/// (X^T S^{-1} X + I / tau2)^{-1} X^T S^{-1} y.
FitResult fit_gp_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CovarianceFactor& factor,
                       double tau2);

FitResult fit_gls_vecchia(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LocationSet& locations,
                          const KernelSpec& spec, Eigen::Index neighbors);

/// Gaussian log-likelihood of y ~ N(X beta, Sigma) with beta at its GLS value.
/// Replicated sites are collapsed exactly, so the cost is cubic in the number
/// of distinct sites.
class ProfileLikelihood {
 public:
  ProfileLikelihood(Eigen::MatrixXd x, Eigen::VectorXd y, const LocationSet& locations,
                    KernelFamily family);

  /// Log-likelihood at fully specified covariance parameters.
  [[nodiscard]] double log_likelihood(const KernelSpec& spec) const;

  /// Maximizes over (log scale, log variance ratio) with the overall level
  /// profiled analytically; returns the parameters at the optimum.
  struct Optimum {
    KernelSpec spec;
    double log_likelihood = 0.0;
    int evaluations = 0;
    bool converged = false;
  };
  [[nodiscard]] Optimum maximize(const SimplexOptions& options) const;

  [[nodiscard]] std::unique_ptr<CovarianceFactor> factor(const KernelSpec& spec) const;
  [[nodiscard]] double median_site_distance() const noexcept { return median_distance_; }

 private:
  [[nodiscard]] double concentrated(double log_scale, double log_ratio, double* sigma2_out) const;

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  KernelFamily family_;
  SiteMap sites_;
  Eigen::MatrixXd site_distances_;
  double median_distance_ = 1.0;
  double max_distance_ = 1.0;
};

struct ProfileOptions {
  SimplexOptions simplex{500, 1.0, 1e-7, 1e-4};
};

/// Feasible GLS: covariance parameters by maximum likelihood, then GLS.
/// Non-convergence within the evaluation cap is flagged in diagnostics["converged"].
FitResult fit_gls_profile(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LocationSet& locations,
                          KernelFamily family, const ProfileOptions& options = {});

/// Spline basis with its penalized spectrum and GCV grid, built once per location set.
struct SmootherContext {
  SmootherContext(SplineBasis b, std::vector<double> g);

  SplineBasis basis;
  PenalizedSpectrum spectrum;
  std::vector<double> grid;
};

enum class PenaltyMode { Gcv, None };

/// Joint fit of y on [x, B] with the penalty on the basis block only. The basis
/// already spans the constant, so x should not carry an intercept column.
FitResult fit_spline_plm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SmootherContext& smoother,
                         PenaltyMode mode);
FitResult fit_spline_plm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SplineBasis& basis,
                         PenaltyMode mode);

/// Spatial+: residualize the exposure on the basis (GCV), then fit y on the
/// residualized exposure and the basis (GCV). Extra columns of x are kept as-is.
FitResult fit_spatial_plus(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SmootherContext& smoother);
FitResult fit_spatial_plus(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SplineBasis& basis);

/// GLS under Sigma = sigma^2 I + v^2 (block of ones per group) with the ratio
/// v^2 / sigma^2 chosen by maximum likelihood.
FitResult fit_grouped_re(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<std::int64_t>& groups);

}  // namespace spconf
