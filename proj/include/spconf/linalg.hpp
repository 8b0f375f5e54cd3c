#pragma once

#include <Eigen/Dense>
#include <memory>

#include "spconf/geometry.hpp"
#include "spconf/kernels.hpp"

namespace spconf {

/// Relative tolerance for reconstruction checks on dense factorizations.
inline constexpr double kReconstructionTol = 1e-8;

/// A factored covariance Sigma. Implementations may be exact (dense Cholesky,
/// replicated-site Woodbury) or approximate (Vecchia).
///
/// whiten() maps v to W v with W^T W = Sigma^{-1}; color() is its inverse, so
/// color(e) has covariance Sigma when e is white noise.
class CovarianceFactor {
 public:
  virtual ~CovarianceFactor() = default;

  [[nodiscard]] virtual Eigen::Index size() const noexcept = 0;
  [[nodiscard]] virtual double log_det() const noexcept = 0;
  [[nodiscard]] virtual Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const = 0;
  [[nodiscard]] virtual Eigen::MatrixXd whiten(const Eigen::MatrixXd& v) const = 0;
  [[nodiscard]] virtual Eigen::MatrixXd color(const Eigen::MatrixXd& e) const = 0;
};

/// Dense Cholesky factor L L^T = Sigma of a symmetric positive-definite matrix.
class SpdFactor final : public CovarianceFactor {
 public:
  /// Throws NotPositiveDefinite with the failing pivot index.
  explicit SpdFactor(const Eigen::MatrixXd& sigma);

  [[nodiscard]] Eigen::Index size() const noexcept override { return lower_.rows(); }
  [[nodiscard]] double log_det() const noexcept override { return log_det_; }
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const override;
  [[nodiscard]] Eigen::MatrixXd whiten(const Eigen::MatrixXd& v) const override;
  [[nodiscard]] Eigen::MatrixXd color(const Eigen::MatrixXd& e) const override;

  [[nodiscard]] const Eigen::MatrixXd& lower() const noexcept { return lower_; }

 private:
  Eigen::MatrixXd lower_;
  double log_det_ = 0.0;
};

inline SpdFactor spd_factor(const Eigen::MatrixXd& sigma) { return SpdFactor(sigma); }

/// Sigma = nugget * I + J C J^T for points sharing sites, where J is the n x m
/// site-incidence matrix and C the m x m site covariance without nugget.
/// All operations cost O(n + m^3) instead of O(n^3).
class ReplicatedFactor final : public CovarianceFactor {
 public:
  ReplicatedFactor(const SiteMap& sites, const Eigen::MatrixXd& site_covariance, double nugget);

  [[nodiscard]] Eigen::Index size() const noexcept override {
    return static_cast<Eigen::Index>(site_of_.size());
  }
  [[nodiscard]] double log_det() const noexcept override { return log_det_; }
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const override;
  [[nodiscard]] Eigen::MatrixXd whiten(const Eigen::MatrixXd& v) const override;
  [[nodiscard]] Eigen::MatrixXd color(const Eigen::MatrixXd& e) const override;

 private:
  Eigen::MatrixXd scaled_site_sums(const Eigen::MatrixXd& v) const;

  std::vector<Eigen::Index> site_of_;
  std::vector<std::vector<Eigen::Index>> members_;
  Eigen::VectorXd sqrt_counts_;
  double nugget_;
  Eigen::LLT<Eigen::MatrixXd> site_llt_;
  double log_det_ = 0.0;
};

/// u^T Sigma^{-1} v.
double quad_form(const CovarianceFactor& factor, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Factor of the kernel covariance on `locations`; coincident points are
/// collapsed into a ReplicatedFactor when the nugget is positive.
std::unique_ptr<CovarianceFactor> make_covariance_factor(const KernelSpec& spec,
                                                          const LocationSet& locations);

/// Same, reusing a site map and the site distance matrix.
std::unique_ptr<CovarianceFactor> make_covariance_factor(const KernelSpec& spec,
                                                          const SiteMap& sites,
                                                          const Eigen::MatrixXd& site_distances);

}  // namespace spconf
