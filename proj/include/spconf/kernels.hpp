#pragma once

#include <Eigen/Dense>
#include <string_view>

#include "spconf/geometry.hpp"

namespace spconf {

enum class KernelFamily { Spherical, Exponential, SquaredExponential };

KernelFamily parse_kernel_family(std::string_view name);
std::string_view to_string(KernelFamily family) noexcept;

/// Stationary isotropic covariance: variance * rho(d) plus a nugget on the diagonal.
///
/// `scale` is the inverse range phi for spherical/exponential and the lengthscale l
/// for squared-exponential. The spherical correlation is zero beyond d = 1/phi.
struct KernelSpec {
  KernelFamily family = KernelFamily::Exponential;
  double variance = 1.0;
  double scale = 1.0;
  double nugget = 0.0;

  /// Throws InvalidArgument unless variance >= 0, scale > 0, nugget >= 0.
  /// A zero variance is accepted as the pure-nugget degenerate case.
  void validate() const;
};

/// Covariance at distance d, excluding the nugget. Throws on d < 0.
double kernel_eval(const KernelSpec& spec, double d);

/// Sigma_ij = kernel_eval(d_ij) + nugget * [i == j].
Eigen::MatrixXd covariance_matrix(const KernelSpec& spec, const LocationSet& locations);
/// Same assembly from precomputed pairwise distances.
Eigen::MatrixXd covariance_from_distances(const KernelSpec& spec, const Eigen::MatrixXd& dist);

/// Squared-exponential covariance whose bandwidth a_n = n^{1/(2 alpha + d)} grows
/// with the sample size; the nugget must be strictly positive.
struct TheoremKernelSpec {
  double gamma = 1.0;
  double nugget = 1.0;
  double alpha = 1.0;
  int dim = 1;
  Eigen::Index n = 1;

  [[nodiscard]] double bandwidth() const;
  void validate() const;
};

Eigen::MatrixXd theorem_covariance(const TheoremKernelSpec& spec, const LocationSet& locations);

}  // namespace spconf
