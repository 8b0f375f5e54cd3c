#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spconf/dgp.hpp"
#include "spconf/error.hpp"
#include "spconf/stats.hpp"

using namespace spconf;

namespace {

FixedConfounderConfig small_config() {
  FixedConfounderConfig c;
  c.n = 400;
  c.smoother_rank = 50;
  return c;
}

double sample_var(const Eigen::VectorXd& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd ac = a.array() - a.mean();
  const Eigen::ArrayXd bc = b.array() - b.mean();
  return (ac * bc).sum() / std::sqrt(ac.square().sum() * bc.square().sum());
}

// Y - X beta - g has mean within 4 sd/sqrt(n) of 0 and variance within 10%.
void expect_outcome_equation(const SimulatedDataset& d, double outcome_var) {
  const Eigen::VectorXd r = d.y - d.beta_true * d.x - d.g_true;
  const auto n = static_cast<double>(r.size());
  EXPECT_LE(std::abs(r.mean()), 4.0 * std::sqrt(outcome_var / n));
  EXPECT_NEAR(sample_var(r), outcome_var, 0.1 * outcome_var);
  EXPECT_LE((r - d.outcome_noise).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + d.y.cwiseAbs().maxCoeff()));
}

}  // namespace

TEST(Scenario, Ids) {
  EXPECT_EQ(parse_scenario("random_confounder"), Scenario::RandomConfounder);
  EXPECT_EQ(to_string(Scenario::Eigen), "eigen");
  EXPECT_THROW(parse_scenario("areal"), InvalidArgument);
}

TEST(FixedConfounder, FrozenSurfaceSharedAcrossReplications) {
  const FixedConfounderConfig cfg = small_config();
  const ConfounderSurface frozen = frozen_confounder(cfg, 11);
  const auto a = gen_fixed_confounder(cfg, frozen, RngStream(11, 1));
  const auto b = gen_fixed_confounder(cfg, frozen, RngStream(11, 2));
  EXPECT_EQ(a.g_true, b.g_true);
  EXPECT_EQ(a.g_true, frozen.g);
  EXPECT_NE(a.x, b.x);
  EXPECT_NE(a.y, b.y);
  EXPECT_EQ(a.locations.coords(), b.locations.coords());
  // building the surface on the fly gives the same one
  const auto c = gen_fixed_confounder(cfg, std::nullopt, RngStream(11, 1));
  EXPECT_EQ(c.g_true, a.g_true);
  EXPECT_EQ(c.x, a.x);
}

TEST(FixedConfounder, ExposureVarianceIdentity) {
  const FixedConfounderConfig cfg;
  const auto d = gen_fixed_confounder(cfg, std::nullopt, RngStream(1, 1));
  ASSERT_EQ(d.x.size(), 2000);
  const double want = sample_var(d.g_true) + 1.0;
  EXPECT_NEAR(sample_var(d.x), want, 0.1 * want);
  expect_outcome_equation(d, 1.0);
  EXPECT_EQ(d.scenario, Scenario::FixedConfounder);
  EXPECT_EQ(d.beta_true, 1.0);
}

TEST(FixedConfounder, ZeroExposureNoiseRejected) {
  FixedConfounderConfig cfg = small_config();
  cfg.exposure_noise_var = 0.0;
  EXPECT_THROW(gen_fixed_confounder(cfg, std::nullopt, RngStream(1, 1)), IdentifiabilityError);
  cfg = small_config();
  cfg.n = 40;
  EXPECT_THROW(gen_fixed_confounder(cfg, std::nullopt, RngStream(1, 1)), InvalidArgument);
}

TEST(FixedConfounder, SurfaceIsSmoothedField) {
  // the surface is a spline fit, so it lies in the span of the smoother basis
  const FixedConfounderConfig cfg = small_config();
  const ConfounderModel model(cfg, 3);
  const Eigen::VectorXd g = model.surface(RngStream(3, 0).substream("confounder"));
  const Eigen::MatrixXd& b = model.smoother().basis.design;
  const Eigen::VectorXd proj = b * b.colPivHouseholderQr().solve(g);
  EXPECT_LE((proj - g).norm(), 1e-8 * g.norm());
}

TEST(RandomConfounder, DeterministicAndRedrawn) {
  const FixedConfounderConfig cfg = small_config();
  const auto a = gen_random_confounder(cfg, RngStream(4, 1));
  const auto b = gen_random_confounder(cfg, RngStream(4, 1));
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.g_true, b.g_true);
  const auto c = gen_random_confounder(cfg, RngStream(4, 2));
  EXPECT_NE(a.g_true, c.g_true);
  EXPECT_EQ(a.locations.coords(), c.locations.coords());
  EXPECT_EQ(a.scenario, Scenario::RandomConfounder);
}

TEST(RandomConfounder, PinnedStreamMatchesFixed) {
  const FixedConfounderConfig cfg = small_config();
  const auto r = gen_random_confounder(cfg, RngStream(5, 0));
  const auto f = gen_fixed_confounder(cfg, std::nullopt, RngStream(5, 0));
  EXPECT_EQ(r.g_true, f.g_true);
  EXPECT_EQ(r.x, f.x);
  EXPECT_EQ(r.y, f.y);
}

TEST(RandomConfounder, PooledCorrelation) {
  const FixedConfounderConfig cfg = small_config();
  const ConfounderModel model(cfg, 6);
  Eigen::VectorXd xs(100 * cfg.n);
  Eigen::VectorXd gs(100 * cfg.n);
  for (int r = 0; r < 100; ++r) {
    const RngStream rng(6, static_cast<std::uint64_t>(r + 1));
    const auto d = model.dataset(model.surface(rng.substream("confounder")), rng.substream("noise"),
                                 Scenario::RandomConfounder);
    xs.segment(r * cfg.n, cfg.n) = d.x;
    gs.segment(r * cfg.n, cfg.n) = d.g_true;
  }
  EXPECT_GT(corr(xs, gs), 0.5);
}

TEST(Clustered, ConfounderIsLocationOverTen) {
  const auto d = gen_clustered_linear(300, 10, RngStream(7, 1));
  ASSERT_EQ(d.x.size(), 3000);
  EXPECT_NEAR(d.g_true.minCoeff(), 0.1, 1e-15);
  EXPECT_NEAR(d.g_true.maxCoeff(), 30.0, 1e-12);
  ASSERT_TRUE(d.groups);
  // group ids are the site indices 1..m
  std::vector<double> sums(301, 0.0);
  std::vector<int> counts(301, 0);
  for (Eigen::Index i = 0; i < 3000; ++i) {
    const auto grp = static_cast<std::size_t>((*d.groups)[static_cast<std::size_t>(i)]);
    ASSERT_GE(grp, 1u);
    ASSERT_LE(grp, 300u);
    sums[grp] += d.g_true(i);
    counts[grp] += 1;
  }
  for (std::size_t grp = 1; grp <= 300; ++grp) {
    EXPECT_EQ(counts[grp], 10);
    EXPECT_NEAR(sums[grp] / counts[grp], static_cast<double>(grp) / 10.0, 1e-12);
  }
  expect_outcome_equation(d, 1.0);
  EXPECT_NEAR(sample_var(d.x - d.g_true), 1.0, 0.1);
}

TEST(Clustered, SingleLocation) {
  const auto d = gen_clustered_linear(1, 5, RngStream(8, 1));
  ASSERT_EQ(d.x.size(), 5);
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(d.g_true(i), 0.1, 1e-15);
  EXPECT_THROW(gen_clustered_linear(0, 5, RngStream(8, 1)), InvalidArgument);
}

TEST(EigenScenario, ComponentsFromCoefficients) {
  EigenScenarioConfig cfg;
  const auto draw = gen_eigen_scenario(cfg, RngStream(9, 1));
  const auto& d = draw.data;
  ASSERT_TRUE(d.h_true);
  EXPECT_TRUE(d.g_true.isApprox(draw.system.phi * draw.c_g, 1e-14));
  EXPECT_TRUE(d.h_true->isApprox(draw.system.phi * draw.c_h, 1e-14));
  EXPECT_EQ(draw.c_g.size(), cfg.kmax);
  EXPECT_EQ(draw.system.phi.cols(), cfg.kmax);
  const double v = sample_var(d.x - *d.h_true);
  EXPECT_GE(v, 0.05);
  EXPECT_LE(v, 0.08);
  expect_outcome_equation(d, 1.0);
}

TEST(EigenScenario, CoefficientsDoNotDependOnN) {
  EigenScenarioConfig a;
  EigenScenarioConfig b;
  b.n = 500;
  EXPECT_EQ(gen_eigen_scenario(a, RngStream(10, 3)).c_g, gen_eigen_scenario(b, RngStream(10, 3)).c_g);
}

TEST(EigenScenario, ExposureNoiseHasNoSpatialAutocorrelation) {
  // lag-one autocorrelation of X - h along the sorted locations
  const auto draw = gen_eigen_scenario(EigenScenarioConfig{}, RngStream(11, 1));
  const Eigen::VectorXd e = draw.data.x - *draw.data.h_true;
  const Eigen::Index n = e.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto& c = draw.data.locations.coords();
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return c(i, 0) < c(j, 0); });
  const double m = e.mean();
  double num = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) num += (e(order[i]) - m) * (e(order[i - 1]) - m);
  const double rho = num / (e.array() - m).square().sum();
  EXPECT_LE(std::abs(rho), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(EigenScenario, Validation) {
  EigenScenarioConfig cfg;
  cfg.kappa2 = 0.0;
  EXPECT_THROW(gen_eigen_scenario(cfg, RngStream(1, 1)), IdentifiabilityError);
  cfg = EigenScenarioConfig{};
  cfg.kmax = 12;
  EXPECT_THROW(gen_eigen_scenario(cfg, RngStream(1, 1)), InvalidArgument);
  EXPECT_EQ(cfg.analysis_kernel().family, KernelFamily::SquaredExponential);
  EXPECT_EQ(cfg.analysis_kernel().nugget, 2.0);
}
