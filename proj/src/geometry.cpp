#include "spconf/geometry.hpp"

#include <cmath>
#include <map>

#include "spconf/error.hpp"

namespace spconf {

LocationSet::LocationSet(Eigen::MatrixXd coords, DensityTag density,
                         std::optional<std::vector<std::int64_t>> groups)
    : coords_(std::move(coords)), density_(density), groups_(std::move(groups)) {
  if (coords_.rows() < 1) throw InvalidArgument("LocationSet: need at least one point");
  if (coords_.cols() != 1 && coords_.cols() != 2) {
    throw InvalidArgument("LocationSet: dimension must be 1 or 2");
  }
  if (!coords_.allFinite()) throw InvalidArgument("LocationSet: non-finite coordinate");
  if (groups_ && static_cast<Eigen::Index>(groups_->size()) != coords_.rows()) {
    throw InvalidArgument("LocationSet: group vector length differs from point count");
  }
}

LocationSet LocationSet::subset(const std::vector<Eigen::Index>& rows) const {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), coords_.cols());
  std::optional<std::vector<std::int64_t>> sub_groups;
  if (groups_) sub_groups.emplace();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = coords_.row(rows[i]);
    if (groups_) sub_groups->push_back((*groups_)[static_cast<std::size_t>(rows[i])]);
  }
  return LocationSet(std::move(sub), density_, std::move(sub_groups));
}

LocationSet sample_uniform_square(Eigen::Index n, double lo, double hi, RngStream& rng) {
  if (n < 1) throw InvalidArgument("sample_uniform_square: n must be >= 1");
  if (!(lo < hi)) throw InvalidArgument("sample_uniform_square: require lo < hi");
  Eigen::MatrixXd coords(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    coords(i, 0) = rng.uniform(lo, hi);
    coords(i, 1) = rng.uniform(lo, hi);
  }
  return LocationSet(std::move(coords), UniformSquare{lo, hi});
}

LocationSet sample_gaussian_line(Eigen::Index n, double sd, RngStream& rng) {
  if (n < 1) throw InvalidArgument("sample_gaussian_line: n must be >= 1");
  if (!(sd > 0.0)) throw InvalidArgument("sample_gaussian_line: sd must be positive");
  Eigen::MatrixXd coords(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) coords(i, 0) = rng.normal(0.0, sd);
  return LocationSet(std::move(coords), GaussianLine{sd});
}

LocationSet fixed_grid_locations(std::size_t m, std::size_t k) {
  if (m < 1 || k < 1) throw InvalidArgument("fixed_grid_locations: m and k must be >= 1");
  const auto n = static_cast<Eigen::Index>(m * k);
  Eigen::MatrixXd coords(n, 1);
  std::vector<std::int64_t> groups(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 0; j < k; ++j, ++row) {
      coords(row, 0) = static_cast<double>(i);
      groups[static_cast<std::size_t>(row)] = static_cast<std::int64_t>(i);
    }
  }
  return LocationSet(std::move(coords), FixedGrid{m, k}, std::move(groups));
}

Eigen::MatrixXd cross_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("cross_distances: dimension mismatch");
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      d(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }
  return d;
}

Eigen::MatrixXd distance_matrix(const LocationSet& locations) {
  const Eigen::MatrixXd& c = locations.coords();
  const Eigen::Index n = c.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = (c.row(i) - c.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

SiteMap collapse_sites(const Eigen::MatrixXd& coords) {
  SiteMap map;
  std::map<std::vector<double>, Eigen::Index> index;
  std::vector<Eigen::Index> first_row;
  map.site_of.resize(static_cast<std::size_t>(coords.rows()));
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    std::vector<double> key;
    key.reserve(static_cast<std::size_t>(coords.cols()));
    for (Eigen::Index c = 0; c < coords.cols(); ++c) key.push_back(coords(i, c));
    auto [it, inserted] = index.try_emplace(std::move(key), static_cast<Eigen::Index>(first_row.size()));
    if (inserted) {
      first_row.push_back(i);
      map.counts.push_back(0);
    }
    map.site_of[static_cast<std::size_t>(i)] = it->second;
    ++map.counts[static_cast<std::size_t>(it->second)];
  }
  map.sites.resize(static_cast<Eigen::Index>(first_row.size()), coords.cols());
  for (std::size_t s = 0; s < first_row.size(); ++s) {
    map.sites.row(static_cast<Eigen::Index>(s)) = coords.row(first_row[s]);
  }
  return map;
}

}  // namespace spconf
