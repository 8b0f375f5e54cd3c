#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spconf/geometry.hpp"
#include "spconf/kernels.hpp"
#include "spconf/linalg.hpp"

namespace spconf {

/// Nearest-neighbour (Vecchia) approximation of a kernel covariance.
///
/// Points are ordered by their first coordinate; each point is conditioned on
/// its `neighbors` nearest predecessors, giving Sigma^{-1} ~ (I - A)^T D^{-1} (I - A)
/// with A strictly lower triangular in that order. Exact when neighbors >= n - 1.
class VecchiaFactor final : public CovarianceFactor {
 public:
  VecchiaFactor(const KernelSpec& spec, const LocationSet& locations, Eigen::Index neighbors);

  [[nodiscard]] Eigen::Index size() const noexcept override {
    return static_cast<Eigen::Index>(order_.size());
  }
  [[nodiscard]] double log_det() const noexcept override { return log_det_; }
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const override;
  [[nodiscard]] Eigen::MatrixXd whiten(const Eigen::MatrixXd& v) const override;
  [[nodiscard]] Eigen::MatrixXd color(const Eigen::MatrixXd& e) const override;

  [[nodiscard]] const std::vector<Eigen::Index>& order() const noexcept { return order_; }

 private:
  std::vector<Eigen::Index> order_;
  std::vector<std::vector<Eigen::Index>> neighbors_;  // original indices
  std::vector<Eigen::VectorXd> weights_;
  Eigen::VectorXd cond_sd_;
  double log_det_ = 0.0;
};

}  // namespace spconf
