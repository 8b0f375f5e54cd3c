#include "spconf/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spconf/error.hpp"

namespace spconf {

namespace {

constexpr double kRankThreshold = 1e-11;

bool hat_is_full(double hat_trace, Eigen::Index n) {
  return hat_trace >= static_cast<double>(n) * (1.0 - 1e-10);
}

}  // namespace

double thinplate_radial(double r, int dim) {
  if (dim == 1) return r * r * r;
  if (r <= 0.0) return 0.0;
  return r * r * std::log(r);
}

std::vector<Eigen::Index> farthest_point_knots(const Eigen::MatrixXd& coords, Eigen::Index count) {
  const Eigen::Index n = coords.rows();
  if (count < 0 || count > n) throw InvalidArgument("farthest_point_knots: bad knot count");
  std::vector<Eigen::Index> knots;
  if (count == 0) return knots;
  knots.reserve(static_cast<std::size_t>(count));
  Eigen::VectorXd nearest = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::Index next = 0;
  for (Eigen::Index k = 0; k < count; ++k) {
    knots.push_back(next);
    Eigen::Index best = 0;
    double best_dist = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), (coords.row(i) - coords.row(next)).squaredNorm());
      if (nearest(i) > best_dist) {
        best_dist = nearest(i);
        best = i;
      }
    }
    if (k + 1 < count && !(best_dist > 0.0)) {
      throw InvalidArgument("thinplate_basis: fewer distinct locations than knots");
    }
    next = best;
  }
  return knots;
}

SplineBasis thinplate_basis(const LocationSet& locations, Eigen::Index rank) {
  const int d = locations.dim();
  const Eigen::Index n = locations.size();
  if (rank < d + 2) throw InvalidArgument("thinplate_basis: rank must be at least d + 2");
  if (rank > n) throw InvalidArgument("thinplate_basis: rank exceeds the number of points");
  const Eigen::Index poly = d + 1;
  const Eigen::Index radial = rank - poly;
  const auto knot_rows = farthest_point_knots(locations.coords(), radial);

  SplineBasis basis;
  basis.polynomial_columns = poly;
  basis.knots.resize(radial, d);
  for (Eigen::Index k = 0; k < radial; ++k) {
    basis.knots.row(k) = locations.coords().row(knot_rows[static_cast<std::size_t>(k)]);
  }
  basis.design.resize(n, rank);
  basis.design.col(0).setOnes();
  basis.design.middleCols(1, d) = locations.coords();
  for (Eigen::Index k = 0; k < radial; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = (locations.coords().row(i) - basis.knots.row(k)).norm();
      basis.design(i, poly + k) = thinplate_radial(r, d);
    }
  }
  basis.penalty = Eigen::MatrixXd::Zero(rank, rank);
  const auto radial_block = basis.design.rightCols(radial);
  basis.penalty.bottomRightCorner(radial, radial) =
      radial_block.transpose() * radial_block / static_cast<double>(n);
  return basis;
}

Eigen::MatrixXd padded_penalty(const SplineBasis& basis, Eigen::Index extra) {
  const Eigen::Index p = basis.rank() + extra;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  s.bottomRightCorner(basis.rank(), basis.rank()) = basis.penalty;
  return s;
}

double gcv_score(double rss, Eigen::Index n, double hat_trace) {
  const auto nd = static_cast<double>(n);
  const double denom = nd - hat_trace;
  if (!(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return nd * rss / (denom * denom);
}

std::vector<double> lambda_grid(Eigen::Index n, double lo, double hi, int len) {
  if (!(lo > 0.0) || !(hi >= lo) || len < 1) throw InvalidArgument("lambda_grid: bad bounds");
  std::vector<double> grid(static_cast<std::size_t>(len));
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (int i = 0; i < len; ++i) {
    const double t = len == 1 ? 0.0 : static_cast<double>(i) / (len - 1);
    grid[static_cast<std::size_t>(i)] = static_cast<double>(n) * std::exp(log_lo + t * (log_hi - log_lo));
  }
  return grid;
}

PenalizedSpectrum::PenalizedSpectrum(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (penalty.rows() != p || penalty.cols() != p) {
    throw InvalidArgument("penalized fit: penalty shape does not match the design");
  }
  if (p > n) throw NumericalError("penalized fit: more columns than rows");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < p) {
    throw NumericalError("penalized fit: design matrix is rank deficient");
  }
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const auto perm = qr.colsPermutation();
  const Eigen::MatrixXd s_perm = perm.transpose() * penalty * perm;
  // G = R^{-T} S_perm R^{-1}
  Eigen::MatrixXd left = r.transpose().triangularView<Eigen::Lower>().solve(s_perm);
  Eigen::MatrixXd g = r.transpose().triangularView<Eigen::Lower>().solve(left.transpose());
  g = 0.5 * (g + g.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  if (eig.info() != Eigen::Success) throw NumericalError("penalized fit: eigensolver failed");
  penalty_eigenvalues_ = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& u = eig.eigenvectors();
  const Eigen::MatrixXd thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  q_ = thin_q * u;
  transform_ = perm * r.triangularView<Eigen::Upper>().solve(u);
}

PenalizedFit PenalizedSpectrum::fit(const Eigen::VectorXd& y, double lambda) const {
  if (y.size() != q_.rows()) throw InvalidArgument("penalized fit: response length mismatch");
  if (!(lambda >= 0.0)) throw InvalidArgument("penalized fit: lambda must be >= 0");
  const Eigen::VectorXd w = (1.0 + lambda * penalty_eigenvalues_.array()).inverse().matrix();
  const Eigen::VectorXd wz = w.cwiseProduct(q_.transpose() * y);
  PenalizedFit out;
  out.lambda = lambda;
  out.coefficients = transform_ * wz;
  out.fitted = q_ * wz;
  out.hat_trace = w.sum();
  out.rss = (y - out.fitted).squaredNorm();
  return out;
}

Eigen::VectorXd PenalizedSpectrum::shrinkage(double lambda) const {
  return (1.0 + lambda * penalty_eigenvalues_.array()).inverse().matrix();
}

double PenalizedSpectrum::hat_trace(double lambda) const {
  return (1.0 + lambda * penalty_eigenvalues_.array()).inverse().sum();
}

Eigen::MatrixXd PenalizedSpectrum::inverse_normal_matrix(double lambda) const {
  const Eigen::VectorXd w = (1.0 + lambda * penalty_eigenvalues_.array()).inverse().matrix();
  return transform_ * w.asDiagonal() * transform_.transpose();
}

GcvSelection PenalizedSpectrum::select_gcv(const Eigen::VectorXd& y, const std::vector<double>& grid) const {
  if (grid.empty()) throw InvalidArgument("select_lambda_gcv: empty grid");
  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });

  GcvSelection out;
  out.scores.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  const Eigen::Index n = q_.rows();
  for (std::size_t idx : order) {
    const double lambda = grid[idx];
    if (hat_is_full(hat_trace(lambda), n)) continue;
    PenalizedFit f = fit(y, lambda);
    const double score = gcv_score(f.rss, n, f.hat_trace);
    out.scores[idx] = score;
    if (!std::isfinite(score)) continue;
    // Ascending traversal with <= breaks ties toward the larger lambda.
    if (score <= best) {
      best = score;
      out.lambda = lambda;
      out.fit = std::move(f);
      found = true;
    }
  }
  if (!found) throw NumericalError("select_lambda_gcv: GCV undefined at every grid point");
  return out;
}

PenalizedFit penalized_fit(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty,
                           const Eigen::VectorXd& y, double lambda) {
  if (y.size() != design.rows()) throw InvalidArgument("penalized fit: response length mismatch");
  try {
    return PenalizedSpectrum(design, penalty).fit(y, lambda);
  } catch (const NumericalError&) {
    if (!(lambda > 0.0)) {
      throw NumericalError("penalized fit: singular normal equations at lambda = 0");
    }
  }
  // Rank-deficient design regularized by a positive penalty.
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::MatrixXd normal = gram + lambda * penalty;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) throw NumericalError("penalized fit: singular normal equations");
  PenalizedFit out;
  out.lambda = lambda;
  out.coefficients = llt.solve(design.transpose() * y);
  out.fitted = design * out.coefficients;
  out.rss = (y - out.fitted).squaredNorm();
  out.hat_trace = llt.solve(gram).trace();
  return out;
}

PenalizedFit penalized_fit(const SplineBasis& basis, const Eigen::VectorXd& y, double lambda) {
  return penalized_fit(basis.design, basis.penalty, y, lambda);
}

GcvSelection select_lambda_gcv(const SplineBasis& basis, const Eigen::VectorXd& y,
                               const std::vector<double>& grid) {
  return PenalizedSpectrum(basis.design, basis.penalty).select_gcv(y, grid);
}

}  // namespace spconf
