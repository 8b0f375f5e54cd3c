#include "spconf/linalg.hpp"

#include <cmath>

#include "spconf/error.hpp"

namespace spconf {

namespace {

// Unblocked Cholesky used only to locate the failing pivot after Eigen's LLT reports
// a breakdown.
[[noreturn]] void report_failing_pivot(const Eigen::MatrixXd& sigma) {
  const Eigen::Index n = sigma.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = sigma(j, j) - l.row(j).head(j).squaredNorm();
    if (!(diag > 0.0)) throw NotPositiveDefinite(static_cast<std::size_t>(j), diag);
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (sigma(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  // LLT and the reference loop disagree only at round-off; report the last pivot.
  throw NotPositiveDefinite(static_cast<std::size_t>(n - 1), l(n - 1, n - 1) * l(n - 1, n - 1));
}

}  // namespace

SpdFactor::SpdFactor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw InvalidArgument("spd_factor: matrix not square");
  if (!sigma.allFinite()) throw InvalidArgument("spd_factor: non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) report_failing_pivot(sigma);
  lower_ = llt.matrixL();
  const Eigen::VectorXd d = lower_.diagonal();
  if (!(d.array() > 0.0).all()) {
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(d(i) > 0.0)) throw NotPositiveDefinite(static_cast<std::size_t>(i), d(i));
    }
  }
  log_det_ = 2.0 * d.array().log().sum();
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& b) const {
  if (b.rows() != size()) throw InvalidArgument("SpdFactor::solve: dimension mismatch");
  Eigen::MatrixXd x = lower_.triangularView<Eigen::Lower>().solve(b);
  lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

Eigen::MatrixXd SpdFactor::whiten(const Eigen::MatrixXd& v) const {
  if (v.rows() != size()) throw InvalidArgument("SpdFactor::whiten: dimension mismatch");
  return lower_.triangularView<Eigen::Lower>().solve(v);
}

Eigen::MatrixXd SpdFactor::color(const Eigen::MatrixXd& e) const {
  if (e.rows() != size()) throw InvalidArgument("SpdFactor::color: dimension mismatch");
  return lower_.triangularView<Eigen::Lower>() * e;
}

ReplicatedFactor::ReplicatedFactor(const SiteMap& sites, const Eigen::MatrixXd& site_covariance,
                                   double nugget)
    : site_of_(sites.site_of), nugget_(nugget) {
  const Eigen::Index m = sites.sites.rows();
  if (site_covariance.rows() != m || site_covariance.cols() != m) {
    throw InvalidArgument("ReplicatedFactor: site covariance has wrong shape");
  }
  if (!(nugget > 0.0)) throw InvalidArgument("ReplicatedFactor: nugget must be positive");
  members_.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < site_of_.size(); ++i) {
    members_[static_cast<std::size_t>(site_of_[i])].push_back(static_cast<Eigen::Index>(i));
  }
  sqrt_counts_.resize(m);
  for (Eigen::Index s = 0; s < m; ++s) {
    sqrt_counts_(s) = std::sqrt(static_cast<double>(members_[static_cast<std::size_t>(s)].size()));
  }
  Eigen::MatrixXd a = sqrt_counts_.asDiagonal() * site_covariance * sqrt_counts_.asDiagonal();
  a.diagonal().array() += nugget;
  site_llt_.compute(a);
  if (site_llt_.info() != Eigen::Success) report_failing_pivot(a);
  const Eigen::MatrixXd l = site_llt_.matrixL();
  const auto n = static_cast<double>(site_of_.size());
  log_det_ = (n - static_cast<double>(m)) * std::log(nugget) +
             2.0 * l.diagonal().array().log().sum();
}

Eigen::MatrixXd ReplicatedFactor::scaled_site_sums(const Eigen::MatrixXd& v) const {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(sqrt_counts_.size(), v.cols());
  for (std::size_t i = 0; i < site_of_.size(); ++i) {
    t.row(site_of_[i]) += v.row(static_cast<Eigen::Index>(i));
  }
  return sqrt_counts_.cwiseInverse().asDiagonal() * t;
}

Eigen::MatrixXd ReplicatedFactor::solve(const Eigen::MatrixXd& b) const {
  if (b.rows() != size()) throw InvalidArgument("ReplicatedFactor::solve: dimension mismatch");
  const Eigen::MatrixXd t = scaled_site_sums(b);
  const Eigen::MatrixXd s =
      sqrt_counts_.cwiseInverse().asDiagonal() * (t - nugget_ * site_llt_.solve(t));
  Eigen::MatrixXd out = b;
  for (std::size_t i = 0; i < site_of_.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) -= s.row(site_of_[i]);
  }
  return out / nugget_;
}

// Per site, the mean direction 1/sqrt(k) and the k-1 Helmert contrasts form an
// orthonormal basis. Contrasts have covariance nugget * I; the scaled site sums
// have covariance A = N^{1/2} C N^{1/2} + nugget * I.
Eigen::MatrixXd ReplicatedFactor::whiten(const Eigen::MatrixXd& v) const {
  if (v.rows() != size()) throw InvalidArgument("ReplicatedFactor::whiten: dimension mismatch");
  const Eigen::MatrixXd t = scaled_site_sums(v);
  const Eigen::MatrixXd white_sites = site_llt_.matrixL().solve(t);
  const double inv_sd = 1.0 / std::sqrt(nugget_);
  Eigen::MatrixXd out(v.rows(), v.cols());
  for (std::size_t s = 0; s < members_.size(); ++s) {
    const auto& rows = members_[s];
    out.row(rows[0]) = white_sites.row(static_cast<Eigen::Index>(s));
    Eigen::RowVectorXd prefix = v.row(rows[0]);
    for (std::size_t j = 1; j < rows.size(); ++j) {
      const auto jd = static_cast<double>(j);
      out.row(rows[j]) = (prefix - jd * v.row(rows[j])) * (inv_sd / std::sqrt(jd * (jd + 1.0)));
      prefix += v.row(rows[j]);
    }
  }
  return out;
}

Eigen::MatrixXd ReplicatedFactor::color(const Eigen::MatrixXd& e) const {
  if (e.rows() != size()) throw InvalidArgument("ReplicatedFactor::color: dimension mismatch");
  const auto m = static_cast<Eigen::Index>(members_.size());
  Eigen::MatrixXd white_sites(m, e.cols());
  for (Eigen::Index s = 0; s < m; ++s) white_sites.row(s) = e.row(members_[static_cast<std::size_t>(s)][0]);
  const Eigen::MatrixXd t = site_llt_.matrixL() * white_sites;
  const double sd = std::sqrt(nugget_);
  Eigen::MatrixXd out(e.rows(), e.cols());
  for (std::size_t s = 0; s < members_.size(); ++s) {
    const auto& rows = members_[s];
    const auto k = rows.size();
    const Eigen::RowVectorXd mean_part = t.row(static_cast<Eigen::Index>(s)) / sqrt_counts_(static_cast<Eigen::Index>(s));
    // v_i = mean_part - i c_i / sqrt(i(i+1)) + sum_{j>i} c_j / sqrt(j(j+1))
    Eigen::RowVectorXd suffix = Eigen::RowVectorXd::Zero(e.cols());
    for (std::size_t i = k; i-- > 0;) {
      Eigen::RowVectorXd value = mean_part + suffix;
      if (i >= 1) {
        const auto id = static_cast<double>(i);
        const Eigen::RowVectorXd c = sd * e.row(rows[i]) / std::sqrt(id * (id + 1.0));
        value -= id * c;
        suffix += c;
      }
      out.row(rows[i]) = value;
    }
  }
  return out;
}

double quad_form(const CovarianceFactor& factor, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != factor.size() || v.size() != factor.size()) {
    throw InvalidArgument("quad_form: dimension mismatch");
  }
  const Eigen::VectorXd wu = factor.whiten(u);
  const Eigen::VectorXd wv = factor.whiten(v);
  return wu.dot(wv);
}

std::unique_ptr<CovarianceFactor> make_covariance_factor(const KernelSpec& spec,
                                                          const SiteMap& sites,
                                                          const Eigen::MatrixXd& site_distances) {
  spec.validate();
  if (sites.has_replicates() && spec.nugget > 0.0) {
    KernelSpec no_nugget = spec;
    no_nugget.nugget = 0.0;
    return std::make_unique<ReplicatedFactor>(sites, covariance_from_distances(no_nugget, site_distances),
                                              spec.nugget);
  }
  if (!sites.has_replicates()) {
    // Without replicates the site order is the point order.
    return std::make_unique<SpdFactor>(covariance_from_distances(spec, site_distances));
  }
  KernelSpec no_nugget = spec;
  no_nugget.nugget = 0.0;
  const Eigen::MatrixXd site_cov = covariance_from_distances(no_nugget, site_distances);
  const auto n = static_cast<Eigen::Index>(sites.site_of.size());
  Eigen::MatrixXd full(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      full(i, j) = site_cov(sites.site_of[static_cast<std::size_t>(i)],
                            sites.site_of[static_cast<std::size_t>(j)]);
    }
    full(j, j) += spec.nugget;
  }
  return std::make_unique<SpdFactor>(full);
}

std::unique_ptr<CovarianceFactor> make_covariance_factor(const KernelSpec& spec,
                                                          const LocationSet& locations) {
  const SiteMap sites = collapse_sites(locations.coords());
  return make_covariance_factor(spec, sites, distance_matrix(LocationSet(sites.sites, locations.density())));
}

}  // namespace spconf
