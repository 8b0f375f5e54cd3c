#include "spconf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "spconf/error.hpp"
#include "spconf/stats.hpp"

namespace spconf {

IntervalMethod parse_interval_method(std::string_view id) {
  if (id == "analytic") return IntervalMethod::Analytic;
  if (id == "parametric_bootstrap") return IntervalMethod::ParametricBootstrap;
  if (id == "subsample") return IntervalMethod::Subsample;
  throw InvalidArgument("unknown interval method: " + std::string(id));
}

std::string_view to_string(IntervalMethod method) noexcept {
  switch (method) {
    case IntervalMethod::Analytic:
      return "analytic";
    case IntervalMethod::ParametricBootstrap:
      return "parametric_bootstrap";
    case IntervalMethod::Subsample:
      return "subsample";
  }
  return "unknown";
}

void IntervalSpec::validate() const {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("interval level must lie in (0, 1)");
  if (method != IntervalMethod::Analytic && replicates < 50) {
    throw InvalidArgument("resampling intervals need at least 50 replicates");
  }
  if (method == IntervalMethod::Subsample && !(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw InvalidArgument("subsample fraction must lie in (0, 1]");
  }
}

std::pair<double, double> analytic_ci(const FitResult& fit, double level) {
  if (!fit.se) throw InvalidArgument("analytic_ci: fit has no standard error");
  return normal_interval(fit.beta_hat, *fit.se, level);
}

std::size_t percentile_index(std::size_t count, double level) {
  if (count == 0) throw InvalidArgument("percentile_index: no replicates");
  const double alpha = 1.0 - level;
  const auto idx = static_cast<std::size_t>(std::floor(0.5 * alpha * static_cast<double>(count) + 1e-9));
  return std::min(idx, (count - 1) / 2);
}

namespace {

ResampleResult summarize(std::vector<double> estimates, double center, double scale, double level,
                         bool percentile) {
  ResampleResult out;
  out.se = sd(estimates) * scale;
  if (percentile) {
    std::vector<double> sorted = estimates;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t lo = percentile_index(sorted.size(), level);
    out.ci = {sorted[lo], sorted[sorted.size() - 1 - lo]};
  } else {
    out.ci = normal_interval(center, out.se, level);
  }
  out.estimates = std::move(estimates);
  return out;
}

}  // namespace

ResampleResult parametric_spatial_bootstrap(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& coefficients, const CovarianceFactor& fitted,
                                            int replicates, RngStream rng, double level, bool normal_theory) {
  if (replicates < 1) throw InvalidArgument("bootstrap: need at least one replicate");
  if (x.rows() != y.size() || fitted.size() != y.size() || coefficients.size() != x.cols()) {
    throw InvalidArgument("bootstrap: dimension mismatch");
  }
  const Eigen::Index n = y.size();
  const Eigen::VectorXd mean_part = x * coefficients;
  Eigen::VectorXd white = fitted.whiten(y - mean_part);
  white.array() -= white.mean();

  const auto b = static_cast<Eigen::Index>(replicates);
  Eigen::MatrixXd draws(n, b);
  for (Eigen::Index r = 0; r < b; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) draws(i, r) = white(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  }
  Eigen::MatrixXd y_star = fitted.color(draws);
  y_star.colwise() += mean_part;

  const Eigen::MatrixXd wx = fitted.whiten(x);
  const Eigen::MatrixXd wy = fitted.whiten(y_star);
  Eigen::LLT<Eigen::MatrixXd> llt(wx.transpose() * wx);
  if (llt.info() != Eigen::Success) throw NumericalError("bootstrap: singular normal matrix");
  const Eigen::MatrixXd refits = llt.solve(wx.transpose() * wy);
  std::vector<double> estimates(static_cast<std::size_t>(b));
  for (Eigen::Index r = 0; r < b; ++r) estimates[static_cast<std::size_t>(r)] = refits(0, r);
  return summarize(std::move(estimates), coefficients(0), 1.0, level, !normal_theory);
}

ResampleResult parametric_spatial_bootstrap(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            const LocationSet& locations, const FitResult& fit, int replicates,
                                            RngStream rng, double level, bool normal_theory) {
  if (!fit.cov_params) throw InvalidArgument("bootstrap: fit carries no covariance parameters");
  const auto factor = make_covariance_factor(*fit.cov_params, locations);
  return parametric_spatial_bootstrap(x, y, fit.coefficients, *factor, replicates, std::move(rng), level,
                                      normal_theory);
}

namespace {

// First `take` entries of a partial Fisher-Yates shuffle of 0..count-1.
std::vector<Eigen::Index> draw_without_replacement(Eigen::Index count, Eigen::Index take, RngStream& rng) {
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(count));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < take; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(count - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(take));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

ResampleResult subsample_se(const SubsetEstimator& estimator, Eigen::Index n,
                            const std::optional<std::vector<std::int64_t>>& groups, double beta_hat,
                            double fraction, int reps, RngStream rng, double level) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("subsample: fraction must lie in (0, 1]");
  if (reps < 2) throw InvalidArgument("subsample: need at least two subsets");
  if (static_cast<double>(n) * fraction < 30.0) throw InvalidArgument("subsample: subsets would have fewer than 30 rows");

  std::vector<std::vector<Eigen::Index>> units;
  if (groups) {
    if (static_cast<Eigen::Index>(groups->size()) != n) throw InvalidArgument("subsample: group length mismatch");
    std::map<std::int64_t, std::size_t> index;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto [it, inserted] = index.try_emplace((*groups)[static_cast<std::size_t>(i)], units.size());
      if (inserted) units.emplace_back();
      units[it->second].push_back(i);
    }
  } else {
    units.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) units[static_cast<std::size_t>(i)] = {i};
  }
  const auto unit_count = static_cast<Eigen::Index>(units.size());
  const auto take = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(unit_count))));

  std::vector<double> estimates;
  estimates.reserve(static_cast<std::size_t>(reps));
  double rows_total = 0.0;
  for (int r = 0; r < reps; ++r) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index u : draw_without_replacement(unit_count, take, rng)) {
      const auto& members = units[static_cast<std::size_t>(u)];
      rows.insert(rows.end(), members.begin(), members.end());
    }
    std::sort(rows.begin(), rows.end());
    rows_total += static_cast<double>(rows.size());
    estimates.push_back(estimator(rows));
  }
  const double b = rows_total / reps;
  return summarize(std::move(estimates), beta_hat, std::sqrt(b / static_cast<double>(n)), level, false);
}

}  // namespace spconf
