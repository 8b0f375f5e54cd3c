#include "spconf/vecchia.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spconf/error.hpp"

namespace spconf {

VecchiaFactor::VecchiaFactor(const KernelSpec& spec, const LocationSet& locations,
                             Eigen::Index neighbors) {
  spec.validate();
  if (neighbors < 1) throw InvalidArgument("VecchiaFactor: neighbor count must be >= 1");
  const Eigen::MatrixXd& coords = locations.coords();
  const Eigen::Index n = coords.rows();
  order_.resize(static_cast<std::size_t>(n));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return coords(a, 0) < coords(b, 0); });

  neighbors_.resize(static_cast<std::size_t>(n));
  weights_.resize(static_cast<std::size_t>(n));
  cond_sd_.resize(n);
  const double marginal = spec.variance + spec.nugget;
  std::vector<std::pair<double, Eigen::Index>> cand;
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index i = order_[static_cast<std::size_t>(t)];
    cand.clear();
    for (Eigen::Index s = 0; s < t; ++s) {
      const Eigen::Index j = order_[static_cast<std::size_t>(s)];
      cand.emplace_back((coords.row(i) - coords.row(j)).squaredNorm(), s);
    }
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(neighbors), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    auto& nb = neighbors_[static_cast<std::size_t>(i)];
    nb.resize(k);
    for (std::size_t q = 0; q < k; ++q) nb[q] = order_[static_cast<std::size_t>(cand[q].second)];

    double cond_var = marginal;
    Eigen::VectorXd w;
    if (k > 0) {
      const auto kk = static_cast<Eigen::Index>(k);
      Eigen::MatrixXd c_nn(kk, kk);
      Eigen::VectorXd c_ni(kk);
      for (Eigen::Index a = 0; a < kk; ++a) {
        c_ni(a) = kernel_eval(spec, (coords.row(i) - coords.row(nb[static_cast<std::size_t>(a)])).norm());
        for (Eigen::Index b = 0; b <= a; ++b) {
          const double v = kernel_eval(
              spec, (coords.row(nb[static_cast<std::size_t>(a)]) - coords.row(nb[static_cast<std::size_t>(b)])).norm());
          c_nn(a, b) = v;
          c_nn(b, a) = v;
        }
        c_nn(a, a) += spec.nugget;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(c_nn);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("VecchiaFactor: neighbour covariance is not positive definite");
      }
      w = llt.solve(c_ni);
      cond_var -= c_ni.dot(w);
    }
    if (!(cond_var > 0.0)) throw NotPositiveDefinite(static_cast<std::size_t>(t), cond_var);
    weights_[static_cast<std::size_t>(i)] = std::move(w);
    cond_sd_(i) = std::sqrt(cond_var);
  }
  log_det_ = 2.0 * cond_sd_.array().log().sum();
}

Eigen::MatrixXd VecchiaFactor::whiten(const Eigen::MatrixXd& v) const {
  if (v.rows() != size()) throw InvalidArgument("VecchiaFactor::whiten: dimension mismatch");
  Eigen::MatrixXd out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    Eigen::RowVectorXd r = v.row(i);
    const auto& nb = neighbors_[static_cast<std::size_t>(i)];
    const auto& w = weights_[static_cast<std::size_t>(i)];
    for (std::size_t q = 0; q < nb.size(); ++q) r -= w(static_cast<Eigen::Index>(q)) * v.row(nb[q]);
    out.row(i) = r / cond_sd_(i);
  }
  return out;
}

Eigen::MatrixXd VecchiaFactor::color(const Eigen::MatrixXd& e) const {
  if (e.rows() != size()) throw InvalidArgument("VecchiaFactor::color: dimension mismatch");
  Eigen::MatrixXd out(e.rows(), e.cols());
  for (Eigen::Index i : order_) {
    Eigen::RowVectorXd r = cond_sd_(i) * e.row(i);
    const auto& nb = neighbors_[static_cast<std::size_t>(i)];
    const auto& w = weights_[static_cast<std::size_t>(i)];
    for (std::size_t q = 0; q < nb.size(); ++q) r += w(static_cast<Eigen::Index>(q)) * out.row(nb[q]);
    out.row(i) = r;
  }
  return out;
}

Eigen::MatrixXd VecchiaFactor::solve(const Eigen::MatrixXd& b) const {
  const Eigen::MatrixXd u = whiten(b);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b.rows(), b.cols());
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const Eigen::RowVectorXd scaled = u.row(i) / cond_sd_(i);
    out.row(i) += scaled;
    const auto& nb = neighbors_[static_cast<std::size_t>(i)];
    const auto& w = weights_[static_cast<std::size_t>(i)];
    for (std::size_t q = 0; q < nb.size(); ++q) out.row(nb[q]) -= w(static_cast<Eigen::Index>(q)) * scaled;
  }
  return out;
}

}  // namespace spconf
