#pragma once

#include <Eigen/Dense>
#include <functional>

namespace spconf {

struct SimplexOptions {
  int max_evaluations = 500;
  double initial_step = 0.5;
  double f_tolerance = 1e-7;
  double x_tolerance = 1e-5;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free Nelder-Mead minimization. Non-finite objective values are
/// treated as +infinity. On hitting the evaluation cap the best vertex is returned
/// with converged = false.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const SimplexOptions& options = {});

}  // namespace spconf
