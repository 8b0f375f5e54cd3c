#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "spconf/rng.hpp"

namespace spconf {

struct UniformSquare {
  double lo;
  double hi;
};
struct GaussianLine {
  double sd;
};
struct FixedGrid {
  std::size_t m;
  std::size_t k;
};

/// Sampling density the locations were drawn from.
using DensityTag = std::variant<UniformSquare, GaussianLine, FixedGrid>;

/// Spatial coordinates (n x dim, dim in {1, 2}) plus the density they came from.
class LocationSet {
 public:
  LocationSet(Eigen::MatrixXd coords, DensityTag density,
              std::optional<std::vector<std::int64_t>> groups = std::nullopt);

  [[nodiscard]] Eigen::Index size() const noexcept { return coords_.rows(); }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(coords_.cols()); }
  [[nodiscard]] const Eigen::MatrixXd& coords() const noexcept { return coords_; }
  [[nodiscard]] const DensityTag& density() const noexcept { return density_; }
  [[nodiscard]] const std::optional<std::vector<std::int64_t>>& groups() const noexcept {
    return groups_;
  }

  /// Subset of rows, preserving order; the density tag is carried over.
  [[nodiscard]] LocationSet subset(const std::vector<Eigen::Index>& rows) const;

 private:
  Eigen::MatrixXd coords_;
  DensityTag density_;
  std::optional<std::vector<std::int64_t>> groups_;
};

LocationSet sample_uniform_square(Eigen::Index n, double lo, double hi, RngStream& rng);
LocationSet sample_gaussian_line(Eigen::Index n, double sd, RngStream& rng);
/// m sites at 1..m, each repeated k times; group id i for site i.
LocationSet fixed_grid_locations(std::size_t m, std::size_t k);

Eigen::MatrixXd distance_matrix(const LocationSet& locations);
/// Distances between the rows of two coordinate arrays with equal column count.
Eigen::MatrixXd cross_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Locations collapsed to distinct sites; `site_of[i]` maps point i to its site.
struct SiteMap {
  Eigen::MatrixXd sites;
  std::vector<Eigen::Index> site_of;
  std::vector<Eigen::Index> counts;

  [[nodiscard]] bool has_replicates() const noexcept {
    return static_cast<std::size_t>(sites.rows()) < site_of.size();
  }
};

/// Groups exactly coincident coordinates; sites appear in first-occurrence order.
SiteMap collapse_sites(const Eigen::MatrixXd& coords);

}  // namespace spconf
