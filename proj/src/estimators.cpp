#include "spconf/estimators.hpp"

#include <algorithm>
#include <array>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "spconf/error.hpp"
#include "spconf/stats.hpp"
#include "spconf/vecchia.hpp"

namespace spconf {

namespace {

constexpr double kLevel = 0.95;
constexpr double kRankTol = 1e-11;

constexpr std::array<std::pair<Method, std::string_view>, 10> kMethodIds{{
    {Method::Ols, "ols"},
    {Method::Rsr, "rsr"},
    {Method::GlsKnown, "gls_known"},
    {Method::GlsProfile, "gls_profile"},
    {Method::GlsVecchia, "gls_vecchia"},
    {Method::GpRidge, "gp_ridge"},
    {Method::Gam, "gam"},
    {Method::GamFx, "gam_fx"},
    {Method::SpatialPlus, "spatial_plus"},
    {Method::GroupedRe, "grouped_re"},
}};

void check_shapes(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const char* who) {
  if (x.cols() < 1) throw InvalidArgument(std::string(who) + ": design has no columns");
  if (x.rows() != y.size()) throw InvalidArgument(std::string(who) + ": X and Y lengths differ");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument(std::string(who) + ": non-finite data");
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(who) + ": singular normal matrix");
  return llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

void attach_se(FitResult& out, double variance) {
  if (std::isfinite(variance) && variance > 0.0) {
    out.se = std::sqrt(variance);
    out.ci = normal_interval(out.beta_hat, *out.se, kLevel);
  }
}

FitResult finish(Method method, Eigen::VectorXd coefficients, double variance) {
  FitResult out;
  out.method = method;
  out.beta_hat = coefficients(0);
  out.coefficients = std::move(coefficients);
  attach_se(out, variance);
  return out;
}

}  // namespace

Method parse_method(std::string_view id) {
  for (const auto& [m, name] : kMethodIds) {
    if (name == id) return m;
  }
  throw InvalidArgument("unknown estimator id: " + std::string(id));
}

std::string_view to_string(Method method) noexcept {
  for (const auto& [m, name] : kMethodIds) {
    if (m == method) return name;
  }
  return "unknown";
}

Eigen::MatrixXd design_with_intercept(const Eigen::VectorXd& x) {
  Eigen::MatrixXd d(x.size(), 2);
  d.col(0) = x;
  d.col(1).setOnes();
  return d;
}

FitResult fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_shapes(x, y, "fit_ols");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankTol);
  if (qr.rank() < p) throw NumericalError("fit_ols: design is rank deficient");
  Eigen::VectorXd coef = qr.solve(y);
  const double rss = (y - x * coef).squaredNorm();
  double var = std::numeric_limits<double>::quiet_NaN();
  if (n > p) var = rss / static_cast<double>(n - p) * spd_inverse(x.transpose() * x, "fit_ols")(0, 0);
  FitResult out = finish(Method::Ols, std::move(coef), var);
  out.diagnostics["rss"] = rss;
  return out;
}

FitResult fit_rsr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& basis) {
  check_shapes(x, y, "fit_rsr");
  if (basis.rows() != x.rows()) throw InvalidArgument("fit_rsr: basis row count mismatch");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> xqr(x);
  xqr.setThreshold(kRankTol);
  if (xqr.rank() < p) throw NumericalError("fit_rsr: design is rank deficient");

  Eigen::MatrixXd kept(n, 0);
  if (basis.cols() > 0) {
    const Eigen::MatrixXd projected = basis - x * xqr.solve(basis);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> bqr(projected);
    bqr.setThreshold(1e-9);
    const Eigen::Index r = std::min(bqr.rank(), n - p);
    kept.resize(n, r);
    for (Eigen::Index j = 0; j < r; ++j) kept.col(j) = projected.col(bqr.colsPermutation().indices()(j));
  }
  const Eigen::Index r = kept.cols();
  Eigen::MatrixXd design(n, p + r);
  design << x, kept;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::VectorXd coef = qr.solve(y);
  const double rss = (y - design * coef).squaredNorm();
  // The retained basis is orthogonal to X, so the X block of the inverse
  // normal matrix is (X^T X)^{-1}.
  double var = std::numeric_limits<double>::quiet_NaN();
  if (n > p + r) var = rss / static_cast<double>(n - p - r) * spd_inverse(x.transpose() * x, "fit_rsr")(0, 0);
  FitResult out = finish(Method::Rsr, std::move(coef), var);
  out.diagnostics["basis_columns_kept"] = static_cast<double>(r);
  out.diagnostics["basis_columns_dropped"] = static_cast<double>(basis.cols() - r);
  out.diagnostics["rss"] = rss;
  return out;
}

FitResult fit_rsr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SplineBasis& basis) {
  return fit_rsr(x, y, basis.design);
}

namespace {

FitResult whitened_gls(Method method, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const CovarianceFactor& factor, double prior_precision) {
  check_shapes(x, y, "gls");
  if (factor.size() != x.rows()) throw InvalidArgument("gls: covariance size does not match the data");
  const Eigen::MatrixXd wx = factor.whiten(x);
  const Eigen::VectorXd wy = factor.whiten(y);
  Eigen::MatrixXd a = wx.transpose() * wx;
  a.diagonal().array() += prior_precision;
  const Eigen::MatrixXd inv = spd_inverse(a, "gls");
  Eigen::VectorXd coef = inv * (wx.transpose() * wy);
  FitResult out = finish(method, std::move(coef), inv(0, 0));
  if (out.se) out.diagnostics["model_se"] = *out.se;
  return out;
}

}  // namespace

FitResult fit_gls_known(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CovarianceFactor& factor) {
  return whitened_gls(Method::GlsKnown, x, y, factor, 0.0);
}

FitResult fit_gp_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CovarianceFactor& factor,
                       double tau2) {
  if (!(tau2 > 0.0)) throw InvalidArgument("fit_gp_ridge: tau2 must be positive");
  FitResult out = whitened_gls(Method::GpRidge, x, y, factor, 1.0 / tau2);
  out.diagnostics["tau2"] = tau2;
  return out;
}

FitResult fit_gls_vecchia(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LocationSet& locations,
                          const KernelSpec& spec, Eigen::Index neighbors) {
  const VecchiaFactor factor(spec, locations, neighbors);
  FitResult out = whitened_gls(Method::GlsVecchia, x, y, factor, 0.0);
  out.cov_params = spec;
  out.diagnostics["neighbors"] = static_cast<double>(neighbors);
  return out;
}

ProfileLikelihood::ProfileLikelihood(Eigen::MatrixXd x, Eigen::VectorXd y, const LocationSet& locations,
                                     KernelFamily family)
    : x_(std::move(x)), y_(std::move(y)), family_(family), sites_(collapse_sites(locations.coords())) {
  check_shapes(x_, y_, "ProfileLikelihood");
  if (locations.size() != x_.rows()) throw InvalidArgument("ProfileLikelihood: location count mismatch");
  site_distances_ = distance_matrix(LocationSet(sites_.sites, locations.density()));
  const Eigen::Index m = site_distances_.rows();
  if (m >= 2) {
    std::vector<double> pairs;
    pairs.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    for (Eigen::Index j = 1; j < m; ++j) {
      for (Eigen::Index i = 0; i < j; ++i) pairs.push_back(site_distances_(i, j));
    }
    const auto mid = pairs.begin() + static_cast<std::ptrdiff_t>(pairs.size() / 2);
    std::nth_element(pairs.begin(), mid, pairs.end());
    median_distance_ = *mid;
    max_distance_ = site_distances_.maxCoeff();
  }
}

std::unique_ptr<CovarianceFactor> ProfileLikelihood::factor(const KernelSpec& spec) const {
  return make_covariance_factor(spec, sites_, site_distances_);
}

double ProfileLikelihood::log_likelihood(const KernelSpec& spec) const {
  const auto f = factor(spec);
  const Eigen::MatrixXd wx = f->whiten(x_);
  const Eigen::VectorXd wy = f->whiten(y_);
  const Eigen::VectorXd beta = (wx.transpose() * wx).llt().solve(wx.transpose() * wy);
  const double q = (wy - wx * beta).squaredNorm();
  const auto n = static_cast<double>(y_.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + f->log_det() + q);
}

double ProfileLikelihood::concentrated(double log_scale, double log_ratio, double* sigma2_out) const {
  // Sigma = sigma^2 (ratio * K_scale + I); sigma^2 is maximized in closed form.
  const KernelSpec spec{family_, std::exp(log_ratio), std::exp(log_scale), 1.0};
  std::unique_ptr<CovarianceFactor> f;
  try {
    f = factor(spec);
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::MatrixXd wx = f->whiten(x_);
  const Eigen::VectorXd wy = f->whiten(y_);
  Eigen::LLT<Eigen::MatrixXd> llt(wx.transpose() * wx);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd beta = llt.solve(wx.transpose() * wy);
  const auto n = static_cast<double>(y_.size());
  const double sigma2 = (wy - wx * beta).squaredNorm() / n;
  if (!(sigma2 > 0.0)) return -std::numeric_limits<double>::infinity();
  if (sigma2_out != nullptr) *sigma2_out = sigma2;
  return -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0) - 0.5 * f->log_det();
}

ProfileLikelihood::Optimum ProfileLikelihood::maximize(const SimplexOptions& options) const {
  const double start_scale =
      family_ == KernelFamily::SquaredExponential ? median_distance_ : 1.0 / median_distance_;
  const double log_scale0 = std::log(start_scale);
  constexpr double kScaleSpan = 7.0;
  constexpr double kRatioSpan = 12.0;
  auto objective = [&](const Eigen::VectorXd& t) {
    if (std::abs(t(0) - log_scale0) > kScaleSpan || std::abs(t(1)) > kRatioSpan) {
      return std::numeric_limits<double>::infinity();
    }
    return -concentrated(t(0), t(1), nullptr);
  };
  const SimplexResult res = nelder_mead(objective, Eigen::Vector2d(log_scale0, 0.0), options);
  if (!std::isfinite(res.value)) throw NumericalError("profile likelihood: no finite evaluation");
  double sigma2 = 0.0;
  const double ll = concentrated(res.x(0), res.x(1), &sigma2);
  Optimum out;
  out.spec = KernelSpec{family_, std::exp(res.x(1)) * sigma2, std::exp(res.x(0)), sigma2};
  out.log_likelihood = ll;
  out.evaluations = res.evaluations;
  out.converged = res.converged;
  return out;
}

FitResult fit_gls_profile(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LocationSet& locations,
                          KernelFamily family, const ProfileOptions& options) {
  check_shapes(x, y, "fit_gls_profile");
  if (x.rows() < 30) throw InvalidArgument("fit_gls_profile: needs at least 30 observations");
  const ProfileLikelihood lik(x, y, locations, family);
  const auto opt = lik.maximize(options.simplex);
  const auto f = lik.factor(opt.spec);
  FitResult out = whitened_gls(Method::GlsProfile, x, y, *f, 0.0);
  out.cov_params = opt.spec;
  out.diagnostics["converged"] = opt.converged ? 1.0 : 0.0;
  out.diagnostics["evaluations"] = opt.evaluations;
  out.diagnostics["log_likelihood"] = opt.log_likelihood;
  return out;
}

SmootherContext::SmootherContext(SplineBasis b, std::vector<double> g)
    : basis(std::move(b)), spectrum(basis.design, basis.penalty), grid(std::move(g)) {
  if (grid.empty()) throw InvalidArgument("SmootherContext: empty lambda grid");
}

namespace {

// Penalized partially linear fit at one lambda, with the basis block profiled
// out through its spectral form: beta = [X^T (I-H) X]^{-1} X^T (I-H) y.
struct PlmAtLambda {
  bool valid = false;
  Eigen::VectorXd beta;
  Eigen::MatrixXd m_inv;
  Eigen::VectorXd residual_rot;
  double rss = 0.0;
  double edf = 0.0;
};

PlmAtLambda plm_at_lambda(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& zx,
                          const Eigen::VectorXd& zy, const PenalizedSpectrum& spectrum, double lambda) {
  PlmAtLambda out;
  const Eigen::VectorXd w = spectrum.shrinkage(lambda);
  const Eigen::MatrixXd m = x.transpose() * x - zx.transpose() * w.asDiagonal() * zx;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return out;
  // Guard against X lying numerically inside the unpenalized basis span.
  const double scale = x.colwise().squaredNorm().maxCoeff();
  if (m.diagonal().minCoeff() <= 1e-12 * scale) return out;
  const Eigen::VectorXd rhs = x.transpose() * y - zx.transpose() * w.cwiseProduct(zy);
  out.beta = llt.solve(rhs);
  out.m_inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  const Eigen::VectorXd r = y - x * out.beta;
  out.residual_rot = zy - zx * out.beta;
  const Eigen::VectorXd wz = w.cwiseProduct(out.residual_rot);
  out.rss = std::max(0.0, r.squaredNorm() - 2.0 * out.residual_rot.dot(wz) + wz.squaredNorm());
  const Eigen::MatrixXd x_resid_gram =
      x.transpose() * x - 2.0 * zx.transpose() * w.asDiagonal() * zx +
      zx.transpose() * w.cwiseProduct(w).asDiagonal() * zx;
  out.edf = w.sum() + (out.m_inv * x_resid_gram).trace();
  out.valid = true;
  return out;
}

}  // namespace

FitResult fit_spline_plm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SmootherContext& smoother,
                         PenaltyMode mode) {
  check_shapes(x, y, "fit_spline_plm");
  const PenalizedSpectrum& spectrum = smoother.spectrum;
  if (spectrum.rows() != x.rows()) throw InvalidArgument("fit_spline_plm: basis row count mismatch");
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd zx = spectrum.rotate(x);
  const Eigen::VectorXd zy = spectrum.rotate(y);

  PlmAtLambda best;
  double best_lambda = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  if (mode == PenaltyMode::None) {
    best = plm_at_lambda(x, y, zx, zy, spectrum, 0.0);
    if (!best.valid) throw NumericalError("fit_spline_plm: exposure and basis are collinear");
  } else {
    std::vector<double> grid = smoother.grid;
    std::sort(grid.begin(), grid.end());
    for (double lambda : grid) {
      PlmAtLambda cand = plm_at_lambda(x, y, zx, zy, spectrum, lambda);
      if (!cand.valid) continue;
      const double score = gcv_score(cand.rss, n, cand.edf);
      if (!std::isfinite(score)) continue;
      if (score <= best_score) {
        best_score = score;
        best_lambda = lambda;
        best = std::move(cand);
      }
    }
    if (!best.valid) throw NumericalError("fit_spline_plm: GCV undefined at every grid point");
  }

  const double dof = static_cast<double>(n) - best.edf;
  Eigen::VectorXd coef(x.cols() + spectrum.cols());
  coef.head(x.cols()) = best.beta;
  coef.tail(spectrum.cols()) =
      spectrum.transform() * spectrum.shrinkage(best_lambda).cwiseProduct(best.residual_rot);
  const double sigma2 = dof > 0.0 ? best.rss / dof : std::numeric_limits<double>::quiet_NaN();
  FitResult out = finish(mode == PenaltyMode::None ? Method::GamFx : Method::Gam, std::move(coef),
                         sigma2 * best.m_inv(0, 0));
  out.diagnostics["lambda"] = best_lambda;
  out.diagnostics["edf"] = best.edf;
  out.diagnostics["rss"] = best.rss;
  if (mode == PenaltyMode::Gcv) out.diagnostics["gcv"] = best_score;
  return out;
}

FitResult fit_spline_plm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SplineBasis& basis,
                         PenaltyMode mode) {
  const SmootherContext ctx(basis, lambda_grid(basis.design.rows()));
  return fit_spline_plm(x, y, ctx, mode);
}

FitResult fit_spatial_plus(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SmootherContext& smoother) {
  check_shapes(x, y, "fit_spatial_plus");
  const Eigen::VectorXd x0 = x.col(0);
  const double norm = x0.norm();
  const double span_residual = (x0 - smoother.spectrum.fit(x0, 0.0).fitted).norm();
  if (!(span_residual > 1e-8 * norm)) {
    throw IdentifiabilityError("fit_spatial_plus: exposure lies in the spatial basis span");
  }
  const GcvSelection stage1 = smoother.spectrum.select_gcv(x0, smoother.grid);
  const Eigen::VectorXd residualized = x0 - stage1.fit.fitted;
  if (!(residualized.norm() > 1e-8 * norm)) {
    throw IdentifiabilityError("fit_spatial_plus: residualized exposure is numerically zero");
  }
  Eigen::MatrixXd x2 = x;
  x2.col(0) = residualized;
  FitResult out = fit_spline_plm(x2, y, smoother, PenaltyMode::Gcv);
  out.method = Method::SpatialPlus;
  out.diagnostics["stage1_lambda"] = stage1.lambda;
  out.diagnostics["stage1_edf"] = stage1.fit.hat_trace;
  return out;
}

FitResult fit_spatial_plus(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SplineBasis& basis) {
  const SmootherContext ctx(basis, lambda_grid(basis.design.rows()));
  return fit_spatial_plus(x, y, ctx);
}

FitResult fit_grouped_re(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<std::int64_t>& groups) {
  check_shapes(x, y, "fit_grouped_re");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (static_cast<Eigen::Index>(groups.size()) != n) throw InvalidArgument("fit_grouped_re: group length mismatch");

  std::unordered_map<std::int64_t, Eigen::Index> index;
  std::vector<Eigen::Index> group_of(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [it, inserted] = index.try_emplace(groups[static_cast<std::size_t>(i)],
                                                  static_cast<Eigen::Index>(index.size()));
    group_of[static_cast<std::size_t>(i)] = it->second;
  }
  const auto g = static_cast<Eigen::Index>(index.size());
  if (g < 2) throw InvalidArgument("fit_grouped_re: needs at least two groups");

  // Sufficient statistics: totals of [x y] cross products and group means.
  Eigen::MatrixXd xy(n, p + 1);
  xy << x, y;
  const Eigen::MatrixXd total = xy.transpose() * xy;
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(g, p + 1);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(g);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index k = group_of[static_cast<std::size_t>(i)];
    means.row(k) += xy.row(i);
    counts(k) += 1.0;
  }
  means.array().colwise() /= counts.array();

  // Under (I + rho J) per group, cross products of the whitened data equal
  // total - sum_g k_g * (k_g rho / (1 + k_g rho)) * mean_g mean_g^T.
  struct Eval {
    double loglik = -std::numeric_limits<double>::infinity();
    double rss = 0.0;
    Eigen::VectorXd beta;
    Eigen::MatrixXd inv;
  };
  auto evaluate = [&](double rho) {
    Eval e;
    const Eigen::VectorXd shrink = (counts.array() * counts.array() * rho / (1.0 + counts.array() * rho)).matrix();
    const Eigen::MatrixXd cross = total - means.transpose() * shrink.asDiagonal() * means;
    const Eigen::MatrixXd a = cross.topLeftCorner(p, p);
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return e;
    const Eigen::VectorXd b = cross.topRightCorner(p, 1);
    e.beta = llt.solve(b);
    e.rss = std::max(0.0, cross(p, p) - b.dot(e.beta));
    e.inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    if (!(e.rss > 0.0)) return e;
    const double logdet = (1.0 + counts.array() * rho).log().sum();
    e.loglik = -0.5 * static_cast<double>(n) * std::log(e.rss / static_cast<double>(n)) - 0.5 * logdet;
    return e;
  };

  constexpr double kLo = -20.0;
  constexpr double kHi = 12.0;
  constexpr int kGrid = 33;
  double best_t = kLo;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double t = kLo + (kHi - kLo) * i / (kGrid - 1);
    const double ll = evaluate(std::exp(t)).loglik;
    if (ll > best_ll) {
      best_ll = ll;
      best_t = t;
    }
  }
  const double step = (kHi - kLo) / (kGrid - 1);
  const auto refined = boost::math::tools::brent_find_minima(
      [&](double t) { return -evaluate(std::exp(t)).loglik; }, std::max(kLo, best_t - step),
      std::min(kHi, best_t + step), 40);
  double rho = std::exp(refined.first);
  if (-refined.second < best_ll) rho = std::exp(best_t);
  Eval fit = evaluate(rho);
  const Eval independent = evaluate(0.0);
  if (!(fit.loglik > independent.loglik)) {
    rho = 0.0;
    fit = independent;
  }
  if (fit.beta.size() == 0) throw NumericalError("fit_grouped_re: singular normal matrix");

  const double sigma2_ml = fit.rss / static_cast<double>(n);
  double var = std::numeric_limits<double>::quiet_NaN();
  if (n > p) var = fit.rss / static_cast<double>(n - p) * fit.inv(0, 0);
  FitResult out = finish(Method::GroupedRe, fit.beta, var);
  out.diagnostics["rho"] = rho;
  out.diagnostics["sigma2"] = sigma2_ml;
  out.diagnostics["v2"] = rho * sigma2_ml;
  out.diagnostics["log_likelihood"] = fit.loglik;
  return out;
}

}  // namespace spconf
