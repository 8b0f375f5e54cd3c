#include "spconf/oracles.hpp"

#include <cmath>

#include "spconf/error.hpp"

namespace spconf {

double exact_gls_bias(const Eigen::MatrixXd& x, const CovarianceFactor& factor, const Eigen::VectorXd& g) {
  if (x.rows() != g.size() || factor.size() != g.size()) throw InvalidArgument("exact_gls_bias: dimension mismatch");
  const Eigen::MatrixXd wx = factor.whiten(x);
  const Eigen::VectorXd wg = factor.whiten(g);
  Eigen::LLT<Eigen::MatrixXd> llt(wx.transpose() * wx);
  if (llt.info() != Eigen::Success) throw NumericalError("exact_gls_bias: singular denominator");
  return llt.solve(wx.transpose() * wg)(0);
}

BiasReport gls_bias_decomposition(const SimulatedDataset& data, const CovarianceFactor& factor) {
  if (!data.h_true) throw InvalidArgument("gls_bias_decomposition: dataset has no h component");
  const Eigen::Index n = data.x.size();
  if (factor.size() != n) throw InvalidArgument("gls_bias_decomposition: dimension mismatch");
  const auto nd = static_cast<double>(n);
  Eigen::MatrixXd cols(n, 4);
  cols << *data.h_true, data.exposure_noise, data.g_true, data.outcome_noise;
  const Eigen::MatrixXd w = factor.whiten(cols);
  const Eigen::VectorXd wh = w.col(0);
  const Eigen::VectorXd weta = w.col(1);
  const Eigen::VectorXd wg = w.col(2);
  const Eigen::VectorXd weps = w.col(3);

  BiasReport out;
  auto& c = out.components;
  c["hg"] = wh.dot(wg) / nd;
  c["eta_g"] = weta.dot(wg) / nd;
  c["x_eps"] = (wh + weta).dot(weps) / nd;
  c["hh"] = wh.squaredNorm() / nd;
  c["eta_eta"] = weta.squaredNorm() / nd;
  c["h_eta"] = wh.dot(weta) / nd;
  c["numerator"] = c["hg"] + c["eta_g"] + c["x_eps"];
  c["denominator"] = c["hh"] + c["eta_eta"] + 2.0 * c["h_eta"];

  // Left-hand side from the response itself.
  const Eigen::VectorXd wx = factor.whiten(data.x);
  const Eigen::VectorXd wy = factor.whiten(data.y);
  out.exact_bias = wx.dot(wy) / wx.squaredNorm() - data.beta_true;
  out.ols_asymptotic_bias = ols_asymptotic_bias(data.x, data.g_true);
  return out;
}

double ols_asymptotic_bias(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  if (x.size() != g.size() || x.size() < 2) throw InvalidArgument("ols_asymptotic_bias: need equal lengths >= 2");
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd gc = g.array() - g.mean();
  const double var = xc.squaredNorm();
  if (!(var > 0.0)) throw InvalidArgument("ols_asymptotic_bias: exposure has zero variance");
  return xc.dot(gc) / var;
}

double cross_term_diag(const Eigen::VectorXd& h, const CovarianceFactor& factor, const Eigen::VectorXd& noise) {
  if (h.size() != noise.size()) throw InvalidArgument("cross_term_diag: dimension mismatch");
  return quad_form(factor, h, noise) / static_cast<double>(h.size());
}

double quadform_diag(const Eigen::VectorXd& eta, const CovarianceFactor& factor, double var_eta) {
  if (!(var_eta > 0.0)) throw InvalidArgument("quadform_diag: var_eta must be positive");
  return quad_form(factor, eta, eta) / static_cast<double>(eta.size());
}

IdentifiabilityReport identifiability_check(const Eigen::MatrixXd& x, const Eigen::MatrixXd& basis, double tol) {
  if (x.rows() != basis.rows()) throw InvalidArgument("identifiability_check: row count mismatch");
  IdentifiabilityReport out;
  Eigen::MatrixXd residual = x;
  if (basis.cols() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    qr.setThreshold(1e-11);
    const Eigen::Index r = qr.rank();
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(basis.rows(), r);
    residual -= q * (q.transpose() * x);
  }
  out.x_norm = x.norm();
  out.residual_norm = residual.norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  out.smallest_singular_value = svd.singularValues().size() > 0 ? svd.singularValues().minCoeff() : 0.0;
  out.identified = out.smallest_singular_value > tol * out.x_norm;
  return out;
}

IdentifiabilityReport identifiability_check(const Eigen::MatrixXd& x, const SplineBasis& basis, double tol) {
  return identifiability_check(x, basis.design, tol);
}

}  // namespace spconf
