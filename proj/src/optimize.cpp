#include "spconf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace spconf {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const SimplexOptions& options) {
  const Eigen::Index dim = start.size();
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.push_back(start);
  vals.push_back(eval(start));
  for (Eigen::Index i = 0; i < dim; ++i) {
    Eigen::VectorXd p = start;
    p(i) += options.initial_step;
    pts.push_back(p);
    vals.push_back(eval(p));
  }

  std::vector<std::size_t> idx(pts.size());
  bool converged = false;
  while (evals < options.max_evaluations) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = idx.front();
    const std::size_t worst = idx.back();
    const std::size_t second = idx[idx.size() - 2];

    double spread = 0.0;
    for (std::size_t i : idx) spread = std::max(spread, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    const double f_spread = vals[worst] - vals[best];
    if (std::isfinite(f_spread) && f_spread <= options.f_tolerance * (1.0 + std::abs(vals[best])) &&
        spread <= options.x_tolerance) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i : idx) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(dim);

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < vals[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        pts[worst] = expanded;
        vals[worst] = f_expanded;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < vals[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_contracted;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i : idx) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto best_it = std::min_element(vals.begin(), vals.end());
  SimplexResult out;
  out.x = pts[static_cast<std::size_t>(best_it - vals.begin())];
  out.value = *best_it;
  out.evaluations = evals;
  out.converged = converged;
  return out;
}

}  // namespace spconf
