#include "spconf/dgp.hpp"

#include <array>
#include <string>
#include <utility>

#include "spconf/error.hpp"
#include "spconf/smoothers.hpp"

namespace spconf {

namespace {

constexpr std::array<std::pair<Scenario, std::string_view>, 4> kScenarioIds{{
    {Scenario::FixedConfounder, "fixed_confounder"},
    {Scenario::RandomConfounder, "random_confounder"},
    {Scenario::Clustered, "clustered"},
    {Scenario::Eigen, "eigen"},
}};

Eigen::VectorXd normals(Eigen::Index n, RngStream& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

Scenario parse_scenario(std::string_view id) {
  for (const auto& [s, name] : kScenarioIds) {
    if (name == id) return s;
  }
  throw InvalidArgument("unknown scenario: " + std::string(id));
}

std::string_view to_string(Scenario scenario) noexcept {
  for (const auto& [s, name] : kScenarioIds) {
    if (s == scenario) return name;
  }
  return "unknown";
}

void FixedConfounderConfig::validate() const {
  if (n < 1) throw InvalidArgument("confounder scenario: n must be >= 1");
  if (!(lo < hi)) throw InvalidArgument("confounder scenario: square bounds need lo < hi");
  kernel.validate();
  if (smoother_rank < 4) throw InvalidArgument("confounder scenario: smoother rank must be >= 4");
  if (n < smoother_rank) throw InvalidArgument("confounder scenario: n is below the smoother rank");
  if (!(exposure_noise_var > 0.0)) {
    throw IdentifiabilityError("confounder scenario: exposure noise variance must be positive");
  }
  if (!(outcome_noise_var >= 0.0)) throw InvalidArgument("confounder scenario: negative outcome noise variance");
}

ConfounderModel::ConfounderModel(const FixedConfounderConfig& cfg, std::uint64_t base_seed)
    : cfg_(cfg), locations_([&] {
        cfg.validate();
        RngStream rng = RngStream(base_seed, 0).substream("locations");
        return sample_uniform_square(cfg.n, cfg.lo, cfg.hi, rng);
      }()) {
  build();
}

ConfounderModel::ConfounderModel(const FixedConfounderConfig& cfg, LocationSet locations)
    : cfg_(cfg), locations_(std::move(locations)) {
  cfg_.validate();
  if (locations_.size() != cfg_.n) throw InvalidArgument("ConfounderModel: location count differs from n");
  build();
}

void ConfounderModel::build() {
  const Eigen::MatrixXd sigma = covariance_matrix(cfg_.kernel, locations_);
  try {
    factor_ = std::make_unique<SpdFactor>(sigma);
  } catch (const NotPositiveDefinite&) {
    // One retry with a tiny diagonal inflation.
    Eigen::MatrixXd inflated = sigma;
    inflated.diagonal().array() += 1e-8 * (cfg_.kernel.variance + cfg_.kernel.nugget);
    factor_ = std::make_unique<SpdFactor>(inflated);
    jittered_ = true;
  }
  smoother_ = std::make_shared<const SmootherContext>(
      thinplate_basis(locations_, cfg_.smoother_rank),
      lambda_grid(cfg_.n, cfg_.lambda_grid_lo, cfg_.lambda_grid_hi, cfg_.lambda_grid_len));
}

Eigen::VectorXd ConfounderModel::surface(RngStream rng) const {
  const Eigen::VectorXd raw = factor_->color(normals(cfg_.n, rng));
  return smoother_->spectrum.select_gcv(raw, smoother_->grid).fit.fitted;
}

SimulatedDataset ConfounderModel::dataset(const Eigen::VectorXd& g, RngStream rng, Scenario tag) const {
  if (g.size() != cfg_.n) throw InvalidArgument("ConfounderModel: surface length mismatch");
  const Eigen::VectorXd eta = std::sqrt(cfg_.exposure_noise_var) * normals(cfg_.n, rng);
  const Eigen::VectorXd eps = std::sqrt(cfg_.outcome_noise_var) * normals(cfg_.n, rng);
  SimulatedDataset d{.locations = locations_};
  d.x = g + eta;
  d.y = cfg_.beta * d.x + g + eps;
  d.beta_true = cfg_.beta;
  d.g_true = g;
  d.h_true = g;
  d.exposure_noise = eta;
  d.outcome_noise = eps;
  d.scenario = tag;
  return d;
}

ConfounderSurface frozen_confounder(const FixedConfounderConfig& cfg, std::uint64_t base_seed) {
  const ConfounderModel model(cfg, base_seed);
  return {model.locations(), model.surface(RngStream(base_seed, 0).substream("confounder"))};
}

SimulatedDataset gen_fixed_confounder(const FixedConfounderConfig& cfg, const std::optional<ConfounderSurface>& frozen,
                                      const RngStream& rng) {
  if (frozen) {
    const ConfounderModel model(cfg, frozen->locations);
    return model.dataset(frozen->g, rng.substream("noise"), Scenario::FixedConfounder);
  }
  const ConfounderModel model(cfg, rng.base_seed());
  const Eigen::VectorXd g = model.surface(RngStream(rng.base_seed(), 0).substream("confounder"));
  return model.dataset(g, rng.substream("noise"), Scenario::FixedConfounder);
}

SimulatedDataset gen_random_confounder(const FixedConfounderConfig& cfg, const RngStream& rng) {
  const ConfounderModel model(cfg, rng.base_seed());
  return model.dataset(model.surface(rng.substream("confounder")), rng.substream("noise"),
                       Scenario::RandomConfounder);
}

SimulatedDataset gen_clustered_linear(std::size_t m, std::size_t k, const RngStream& rng, double beta) {
  if (m < 1 || k < 1) throw InvalidArgument("gen_clustered_linear: m and k must be >= 1");
  LocationSet locations = fixed_grid_locations(m, k);
  const Eigen::Index n = locations.size();
  RngStream noise = rng.substream("noise");
  const Eigen::VectorXd g = locations.coords().col(0) / 10.0;
  const Eigen::VectorXd eta = normals(n, noise);
  const Eigen::VectorXd eps = normals(n, noise);
  SimulatedDataset d{.locations = locations};
  d.x = g + eta;
  d.y = beta * d.x + g + eps;
  d.beta_true = beta;
  d.g_true = g;
  d.h_true = g;
  d.exposure_noise = eta;
  d.outcome_noise = eps;
  d.groups = locations.groups();
  d.scenario = Scenario::Clustered;
  return d;
}

void EigenScenarioConfig::validate() const {
  if (n < 1) throw InvalidArgument("eigen scenario: n must be >= 1");
  if (!(sigma > 0.0) || !(ell > 0.0)) throw InvalidArgument("eigen scenario: sigma and ell must be positive");
  if (kmax < 1 || kmax > kMaxHermiteOrder + 1) throw InvalidArgument("eigen scenario: kmax must lie in [1, 11]");
  if (!(kappa2 > 0.0)) throw IdentifiabilityError("eigen scenario: kappa2 must be positive");
  if (!(sigma0_2 >= 0.0)) throw InvalidArgument("eigen scenario: negative outcome noise variance");
  if (!(nugget > 0.0)) throw InvalidArgument("eigen scenario: analysis nugget must be positive");
  if (!(gamma2 >= 0.0)) throw InvalidArgument("eigen scenario: negative kernel variance");
}

KernelSpec EigenScenarioConfig::analysis_kernel() const {
  return KernelSpec{KernelFamily::SquaredExponential, gamma2, ell, nugget};
}

EigenScenarioDraw gen_eigen_scenario(const EigenScenarioConfig& cfg, const RngStream& rng) {
  cfg.validate();
  RngStream loc_rng = rng.substream("locations");
  LocationSet locations = sample_gaussian_line(cfg.n, cfg.sigma, loc_rng);
  EigenSystem system = hermite_eigensystem(cfg.sigma, cfg.ell, cfg.kmax - 1, locations);

  RngStream coef_rng = rng.substream("coefficients");
  Eigen::VectorXd c_g = normals(cfg.kmax, coef_rng);
  Eigen::VectorXd c_h = normals(cfg.kmax, coef_rng);

  RngStream noise = rng.substream("noise");
  const Eigen::VectorXd eta = std::sqrt(cfg.kappa2) * normals(cfg.n, noise);
  const Eigen::VectorXd eps = std::sqrt(cfg.sigma0_2) * normals(cfg.n, noise);
  const Eigen::VectorXd h = system.phi * c_h;
  const Eigen::VectorXd g = system.phi * c_g;

  SimulatedDataset d{.locations = std::move(locations)};
  d.x = h + eta;
  d.y = cfg.beta * d.x + g + eps;
  d.beta_true = cfg.beta;
  d.g_true = g;
  d.h_true = h;
  d.exposure_noise = eta;
  d.outcome_noise = eps;
  d.scenario = Scenario::Eigen;
  return {std::move(d), std::move(system), std::move(c_g), std::move(c_h)};
}

}  // namespace spconf
