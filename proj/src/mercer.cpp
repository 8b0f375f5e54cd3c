#include "spconf/mercer.hpp"

#include <cmath>
#include <variant>

#include "spconf/error.hpp"

namespace spconf {

Eigen::VectorXd hermite_polynomials(int order, double x) {
  if (order < 0) throw InvalidArgument("hermite_polynomials: order must be >= 0");
  Eigen::VectorXd h(order + 1);
  h(0) = 1.0;
  if (order >= 1) h(1) = 2.0 * x;
  for (int k = 1; k < order; ++k) {
    h(k + 1) = 2.0 * x * h(k) - 2.0 * k * h(k - 1);
  }
  return h;
}

EigenSystem hermite_constants(double location_sd, double lengthscale, int k_max) {
  if (!(location_sd > 0.0) || !(lengthscale > 0.0)) {
    throw InvalidArgument("hermite_eigensystem: sd and lengthscale must be positive");
  }
  if (k_max < 0 || k_max > kMaxHermiteOrder) {
    throw InvalidArgument("hermite_eigensystem: k_max must lie in [0, 10]");
  }
  EigenSystem sys;
  sys.location_sd = location_sd;
  sys.lengthscale = lengthscale;
  sys.a = 1.0 / (4.0 * location_sd * location_sd);
  sys.b = 1.0 / (2.0 * lengthscale * lengthscale);
  sys.c = std::sqrt(sys.a * sys.a + 2.0 * sys.a * sys.b);
  sys.big_a = sys.a + sys.b + sys.c;
  sys.big_b = sys.b / sys.big_a;
  sys.eigenvalues.resize(k_max + 1);
  const double lead = std::sqrt(2.0 * sys.a / sys.big_a);
  for (int k = 0; k <= k_max; ++k) sys.eigenvalues(k) = lead * std::pow(sys.big_b, k);
  sys.truncation = k_max + 1;
  return sys;
}

EigenSystem hermite_eigensystem(double location_sd, double lengthscale, int k_max,
                                const LocationSet& locations) {
  const auto* tag = std::get_if<GaussianLine>(&locations.density());
  if (tag == nullptr || locations.dim() != 1) {
    throw InvalidArgument("hermite_eigensystem: locations must be sampled from a Gaussian line");
  }
  if (std::abs(tag->sd - location_sd) > 1e-12 * location_sd) {
    throw InvalidArgument("hermite_eigensystem: location sd does not match the sampling density");
  }
  EigenSystem sys = hermite_constants(location_sd, lengthscale, k_max);
  const Eigen::Index n = locations.size();
  sys.phi.resize(n, k_max + 1);
  const double damp = sys.c - sys.a;
  const double arg_scale = std::sqrt(2.0 * sys.c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = locations.coords()(i, 0);
    const Eigen::VectorXd h = hermite_polynomials(k_max, arg_scale * x);
    sys.phi.row(i) = std::exp(-damp * x * x) * h.transpose();
  }
  sys.normalization.resize(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    const double rms = std::sqrt(sys.phi.col(k).squaredNorm() / static_cast<double>(n));
    if (!(rms > 0.0)) throw NumericalError("hermite_eigensystem: degenerate eigenfunction column");
    sys.normalization(k) = 1.0 / rms;
    sys.phi.col(k) *= sys.normalization(k);
  }
  return sys;
}

Eigen::VectorXd mercer_sigma_inverse_action(const EigenSystem& system, double nugget,
                                            const Eigen::VectorXd& v) {
  const Eigen::Index n = system.phi.rows();
  if (v.size() != n) throw InvalidArgument("mercer_sigma_inverse_action: dimension mismatch");
  if (!(nugget > 0.0)) throw InvalidArgument("mercer_sigma_inverse_action: nugget must be positive");
  const auto nd = static_cast<double>(n);
  const Eigen::VectorXd weights =
      (nd * system.eigenvalues.array() + nugget).inverse().matrix();
  return system.phi * (weights.asDiagonal() * (system.phi.transpose() * v)) / nd;
}

double predicted_gls_bias(const Eigen::VectorXd& c_g, const Eigen::VectorXd& c_h,
                          const EigenSystem& system, double sigma0_2, double denom, Eigen::Index n) {
  if (c_g.size() != c_h.size()) throw InvalidArgument("predicted_gls_bias: coefficient lengths differ");
  if (c_g.size() > system.eigenvalues.size()) {
    throw InvalidArgument("predicted_gls_bias: more coefficients than eigenvalues");
  }
  if (!(denom > 0.0)) throw InvalidArgument("predicted_gls_bias: denominator must be positive");
  const auto nd = static_cast<double>(n);
  double numer = 0.0;
  for (Eigen::Index k = 0; k < c_g.size(); ++k) {
    numer += c_g(k) * c_h(k) / (nd * system.eigenvalues(k) + sigma0_2);
  }
  return numer / denom;
}

}  // namespace spconf
