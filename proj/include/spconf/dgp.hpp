#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "spconf/estimators.hpp"
#include "spconf/geometry.hpp"
#include "spconf/kernels.hpp"
#include "spconf/linalg.hpp"
#include "spconf/mercer.hpp"
#include "spconf/rng.hpp"

namespace spconf {

enum class Scenario { FixedConfounder, RandomConfounder, Clustered, Eigen };

Scenario parse_scenario(std::string_view id);
std::string_view to_string(Scenario scenario) noexcept;

/// Y = X beta + g + eps with the truth kept alongside for the oracles.
struct SimulatedDataset {
  LocationSet locations;
  Eigen::VectorXd x{};
  Eigen::VectorXd y{};
  double beta_true = 1.0;
  Eigen::VectorXd g_true{};
  std::optional<Eigen::VectorXd> h_true{};
  /// Realized exposure noise eta = X - h and outcome noise eps.
  Eigen::VectorXd exposure_noise{};
  Eigen::VectorXd outcome_noise{};
  std::optional<std::vector<std::int64_t>> groups{};
  Scenario scenario = Scenario::FixedConfounder;
};

struct FixedConfounderConfig {
  Eigen::Index n = 2000;
  double lo = 0.0;
  double hi = 10.0;
  KernelSpec kernel{KernelFamily::Spherical, 1.0, 0.25, 0.0};
  Eigen::Index smoother_rank = 200;
  double exposure_noise_var = 1.0;
  double outcome_noise_var = 1.0;
  double beta = 1.0;
  double lambda_grid_lo = 1e-8;
  double lambda_grid_hi = 1e4;
  int lambda_grid_len = 40;

  void validate() const;
};

/// Locations, the factor of the confounder covariance and the smoother used to
/// turn a raw GP draw into the confounder surface. Built once and shared by all
/// replications of the fixed and random confounder scenarios.
class ConfounderModel {
 public:
  /// Locations are drawn from stream 0 of base_seed.
  ConfounderModel(const FixedConfounderConfig& cfg, std::uint64_t base_seed);
  ConfounderModel(const FixedConfounderConfig& cfg, LocationSet locations);

  [[nodiscard]] const FixedConfounderConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const LocationSet& locations() const noexcept { return locations_; }
  [[nodiscard]] const SmootherContext& smoother() const noexcept { return *smoother_; }
  [[nodiscard]] std::shared_ptr<const SmootherContext> shared_smoother() const noexcept { return smoother_; }

  /// Z = GCV thin-plate smooth of Z* ~ GP(0, kernel) at the locations.
  [[nodiscard]] Eigen::VectorXd surface(RngStream rng) const;
  /// X ~ N(g, exposure var), Y ~ N(X beta + g, outcome var).
  [[nodiscard]] SimulatedDataset dataset(const Eigen::VectorXd& g, RngStream rng, Scenario tag) const;

  [[nodiscard]] bool jittered() const noexcept { return jittered_; }

 private:
  void build();

  FixedConfounderConfig cfg_;
  LocationSet locations_;
  std::unique_ptr<SpdFactor> factor_;
  std::shared_ptr<const SmootherContext> smoother_;
  bool jittered_ = false;
};

/// A confounder surface with the locations it lives on.
struct ConfounderSurface {
  LocationSet locations;
  Eigen::VectorXd g;
};

/// The surface every fixed-confounder replication shares: stream 0 of the base seed.
ConfounderSurface frozen_confounder(const FixedConfounderConfig& cfg, std::uint64_t base_seed);

/// Replication with the surface held fixed; without `frozen` the stream-0 surface
/// for rng.base_seed() is built first. Noise comes from rng.
SimulatedDataset gen_fixed_confounder(const FixedConfounderConfig& cfg, const std::optional<ConfounderSurface>& frozen,
                                      const RngStream& rng);

/// Same pipeline with the surface redrawn from rng; locations stay those of stream 0.
SimulatedDataset gen_random_confounder(const FixedConfounderConfig& cfg, const RngStream& rng);

/// s_ij = i, Z_ij = s_ij / 10, X ~ N(Z, 1), Y ~ N(X beta + Z, 1).
SimulatedDataset gen_clustered_linear(std::size_t m, std::size_t k, const RngStream& rng, double beta = 1.0);

struct EigenScenarioConfig {
  Eigen::Index n = 3000;
  double sigma = 1.0;
  double ell = 1.0;
  int kmax = 5;
  double kappa2 = 1.0 / 16.0;
  double sigma0_2 = 1.0;
  /// Nugget of the covariance assumed by the analysis.
  double nugget = 2.0;
  double gamma2 = 1.0;
  double beta = 1.0;

  void validate() const;
  /// Squared-exponential analysis kernel (gamma2, ell, nugget).
  [[nodiscard]] KernelSpec analysis_kernel() const;
};

struct EigenScenarioDraw {
  SimulatedDataset data;
  EigenSystem system;
  Eigen::VectorXd c_g;
  Eigen::VectorXd c_h;
};

/// h and g are combinations of the first kmax eigenfunctions with i.i.d. N(0, 1)
/// coefficients; X = h + eta, eta ~ N(0, kappa2); Y = X beta + g + eps, eps ~ N(0, sigma0_2).
/// Coefficients come from their own substream, so they do not depend on n.
EigenScenarioDraw gen_eigen_scenario(const EigenScenarioConfig& cfg, const RngStream& rng);

}  // namespace spconf
