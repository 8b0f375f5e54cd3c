#include "spconf/kernels.hpp"

#include <cmath>
#include <string>

#include "spconf/error.hpp"

namespace spconf {

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "spherical") return KernelFamily::Spherical;
  if (name == "exponential") return KernelFamily::Exponential;
  if (name == "squared_exponential") return KernelFamily::SquaredExponential;
  throw InvalidArgument("unknown kernel family: " + std::string(name));
}

std::string_view to_string(KernelFamily family) noexcept {
  switch (family) {
    case KernelFamily::Spherical:
      return "spherical";
    case KernelFamily::Exponential:
      return "exponential";
    case KernelFamily::SquaredExponential:
      return "squared_exponential";
  }
  return "unknown";
}

void KernelSpec::validate() const {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw InvalidArgument("KernelSpec: variance must be finite and >= 0");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("KernelSpec: scale must be finite and > 0");
  }
  if (!(nugget >= 0.0) || !std::isfinite(nugget)) {
    throw InvalidArgument("KernelSpec: nugget must be finite and >= 0");
  }
}

namespace {

inline double correlation(KernelFamily family, double scale, double d) {
  switch (family) {
    case KernelFamily::Spherical: {
      const double t = scale * d;
      if (t >= 1.0) return 0.0;
      return 1.0 - 1.5 * t + 0.5 * t * t * t;
    }
    case KernelFamily::Exponential:
      return std::exp(-scale * d);
    case KernelFamily::SquaredExponential:
      return std::exp(-d * d / (2.0 * scale * scale));
  }
  return 0.0;
}

}  // namespace

double kernel_eval(const KernelSpec& spec, double d) {
  if (!(d >= 0.0)) throw InvalidArgument("kernel_eval: distance must be >= 0");
  return spec.variance * correlation(spec.family, spec.scale, d);
}

Eigen::MatrixXd covariance_from_distances(const KernelSpec& spec, const Eigen::MatrixXd& dist) {
  spec.validate();
  const Eigen::Index n = dist.rows();
  if (dist.cols() != n) throw InvalidArgument("covariance_from_distances: matrix not square");
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    sigma(j, j) = spec.variance + spec.nugget;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = spec.variance * correlation(spec.family, spec.scale, dist(i, j));
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  if (!sigma.allFinite()) throw NumericalError("covariance matrix has non-finite entries");
  return sigma;
}

Eigen::MatrixXd covariance_matrix(const KernelSpec& spec, const LocationSet& locations) {
  return covariance_from_distances(spec, distance_matrix(locations));
}

// The rate itself only needs a positive exponent; the smoothness condition is
// enforced where the covariance is built.
double TheoremKernelSpec::bandwidth() const {
  if (n < 1 || dim < 1 || !(2.0 * alpha + dim > 0.0)) throw InvalidArgument("TheoremKernelSpec: bad bandwidth inputs");
  return std::pow(static_cast<double>(n), 1.0 / (2.0 * alpha + dim));
}

void TheoremKernelSpec::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("TheoremKernelSpec: gamma must be > 0");
  if (!(nugget > 0.0)) throw InvalidArgument("TheoremKernelSpec: nugget must be > 0");
  if (dim < 1) throw InvalidArgument("TheoremKernelSpec: dimension must be >= 1");
  if (!(alpha > dim / 2.0)) {
    throw InvalidArgument("TheoremKernelSpec: smoothness alpha must exceed d/2");
  }
  if (n < 1) throw InvalidArgument("TheoremKernelSpec: n must be >= 1");
}

Eigen::MatrixXd theorem_covariance(const TheoremKernelSpec& spec, const LocationSet& locations) {
  spec.validate();
  const double a_n = spec.bandwidth();
  const double g2 = spec.gamma * spec.gamma;
  const Eigen::MatrixXd dist = distance_matrix(locations);
  const Eigen::Index n = dist.rows();
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      sigma(i, j) = g2 * std::exp(-a_n * dist(i, j) * dist(i, j));
    }
    sigma(j, j) += spec.nugget;
  }
  return sigma;
}

}  // namespace spconf
