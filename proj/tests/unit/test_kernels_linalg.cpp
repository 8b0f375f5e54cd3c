#include <gtest/gtest.h>

#include <cmath>

#include "spconf/error.hpp"
#include "spconf/geometry.hpp"
#include "spconf/kernels.hpp"
#include "spconf/linalg.hpp"
#include "spconf/vecchia.hpp"

using namespace spconf;

namespace {

LocationSet line(std::initializer_list<double> xs) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) c(i++, 0) = x;
  return LocationSet(c, GaussianLine{1.0});
}

}  // namespace

TEST(Kernel, SphericalValues) {
  const KernelSpec s{KernelFamily::Spherical, 1.0, 0.25, 0.0};
  EXPECT_DOUBLE_EQ(kernel_eval(s, 0.0), 1.0);
  EXPECT_NEAR(kernel_eval(s, 4.0), 0.0, 1e-15);
  EXPECT_EQ(kernel_eval(s, 5.0), 0.0);
  // phi d = 0.5: 1 - 0.75 + 0.0625
  EXPECT_NEAR(kernel_eval(s, 2.0), 0.3125, 1e-15);
}

TEST(Kernel, ExponentialAndGaussian) {
  EXPECT_NEAR(kernel_eval({KernelFamily::Exponential, 1.0, 0.25, 0.0}, 4.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(kernel_eval({KernelFamily::SquaredExponential, 2.0, 1.5, 0.0}, 3.0), 2.0 * std::exp(-2.0), 1e-15);
}

TEST(Kernel, RejectsNegativeDistance) {
  EXPECT_THROW(kernel_eval({}, -1.0), InvalidArgument);
}

TEST(Kernel, MonotoneNonincreasing) {
  for (auto fam : {KernelFamily::Spherical, KernelFamily::Exponential, KernelFamily::SquaredExponential}) {
    const KernelSpec s{fam, 1.3, 0.25, 0.0};
    double prev = kernel_eval(s, 0.0);
    for (int i = 1; i <= 400; ++i) {
      const double v = kernel_eval(s, 12.0 * i / 400.0);
      ASSERT_LE(v, prev + 1e-15);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.3);
      prev = v;
    }
  }
}

TEST(Kernel, ParseFamily) {
  EXPECT_EQ(parse_kernel_family("spherical"), KernelFamily::Spherical);
  EXPECT_EQ(parse_kernel_family("squared_exponential"), KernelFamily::SquaredExponential);
  EXPECT_THROW(parse_kernel_family("matern"), InvalidArgument);
}

TEST(CovarianceMatrix, DiagonalAndPureNugget) {
  RngStream rng(1, 0);
  const auto l = sample_uniform_square(30, 0, 10, rng);
  const Eigen::MatrixXd s = covariance_matrix({KernelFamily::Exponential, 1.5, 0.3, 0.4}, l);
  for (int i = 0; i < 30; ++i) EXPECT_DOUBLE_EQ(s(i, i), 1.9);
  EXPECT_EQ(s, s.transpose());
  const Eigen::MatrixXd nug = covariance_matrix({KernelFamily::Exponential, 0.0, 0.3, 0.4}, l);
  EXPECT_TRUE(nug.isApprox(0.4 * Eigen::MatrixXd::Identity(30, 30)));
}

TEST(CovarianceMatrix, CoincidentPoints) {
  const auto l = line({2.0, 2.0});
  Eigen::MatrixXd want(2, 2);
  want << 1.5, 1.0, 1.0, 1.5;
  EXPECT_TRUE(covariance_matrix({KernelFamily::Exponential, 1.0, 1.0, 0.5}, l).isApprox(want));
}

TEST(CovarianceMatrix, SmallestEigenvalueAtLeastNugget) {
  RngStream rng(2, 0);
  const auto l = sample_uniform_square(150, 0, 10, rng);
  for (auto fam : {KernelFamily::Spherical, KernelFamily::Exponential, KernelFamily::SquaredExponential}) {
    const Eigen::MatrixXd s = covariance_matrix({fam, 1.0, 0.25, 0.3}, l);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 0.3 - 1e-9);
  }
}

TEST(TheoremKernel, Bandwidth) {
  TheoremKernelSpec t;
  t.n = 1;
  EXPECT_DOUBLE_EQ(t.bandwidth(), 1.0);
  t.alpha = 1.0;
  t.dim = 2;
  t.n = 16;
  EXPECT_NEAR(t.bandwidth(), 2.0, 1e-14);
}

TEST(TheoremKernel, CoincidentAndValidation) {
  TheoremKernelSpec t{1.5, 0.5, 1.0, 1, 10};
  const Eigen::MatrixXd s = theorem_covariance(t, line({1.0, 1.0}));
  EXPECT_NEAR(s(0, 1), 1.5 * 1.5, 1e-14);
  EXPECT_NEAR(s(0, 0), 1.5 * 1.5 + 0.5, 1e-14);
  t.alpha = 0.5;  // not above d/2
  EXPECT_THROW(theorem_covariance(t, line({0.0})), InvalidArgument);
  t.alpha = 1.0;
  t.nugget = 0.0;
  EXPECT_THROW(theorem_covariance(t, line({0.0})), InvalidArgument);
}

TEST(SpdFactor, Identity) {
  const SpdFactor f(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_TRUE(f.lower().isApprox(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_NEAR(f.log_det(), 0.0, 1e-15);
}

TEST(SpdFactor, HandCholesky) {
  Eigen::MatrixXd s(2, 2);
  s << 4, 2, 2, 5;
  const SpdFactor f(s);
  Eigen::MatrixXd l(2, 2);
  l << 2, 0, 1, 2;
  EXPECT_TRUE(f.lower().isApprox(l, 1e-14));
  EXPECT_NEAR(f.log_det(), std::log(16.0), 1e-14);
}

TEST(SpdFactor, SingularReportsPivot) {
  Eigen::MatrixXd s(3, 3);
  s << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  try {
    SpdFactor f(s);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
}

TEST(SpdFactor, ReconstructionTolerance) {
  RngStream rng(4, 0);
  const auto l = sample_uniform_square(120, 0, 10, rng);
  const Eigen::MatrixXd s = covariance_matrix({KernelFamily::Exponential, 1.0, 0.5, 0.1}, l);
  const SpdFactor f(s);
  const Eigen::MatrixXd r = f.lower() * f.lower().transpose();
  EXPECT_LE((r - s).cwiseAbs().maxCoeff(), kReconstructionTol * s.cwiseAbs().maxCoeff());
  EXPECT_GT(f.lower().diagonal().minCoeff(), 0.0);
}

TEST(QuadForm, HandValues) {
  const SpdFactor id(Eigen::MatrixXd::Identity(2, 2));
  const Eigen::Vector2d u(1, 2);
  EXPECT_NEAR(quad_form(id, u, u), 5.0, 1e-14);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d.diagonal() << 1, 4;
  EXPECT_NEAR(quad_form(SpdFactor(d), u, u), 2.0, 1e-14);
  EXPECT_THROW(quad_form(id, Eigen::Vector3d(1, 2, 3), u), InvalidArgument);
}

TEST(QuadForm, MatchesExplicitInverseAndIsSymmetric) {
  RngStream rng(5, 0);
  const auto l = sample_uniform_square(50, 0, 10, rng);
  const Eigen::MatrixXd s = covariance_matrix({KernelFamily::Spherical, 1.0, 0.25, 0.2}, l);
  const SpdFactor f(s);
  const Eigen::MatrixXd inv = s.inverse();
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd u(50);
    Eigen::VectorXd v(50);
    for (int i = 0; i < 50; ++i) {
      u(i) = rng.normal();
      v(i) = rng.normal();
    }
    const double want = u.dot(inv * v);
    EXPECT_NEAR(quad_form(f, u, v), want, 1e-8 * std::max(1.0, std::abs(want)));
    EXPECT_NEAR(quad_form(f, u, v), quad_form(f, v, u), 1e-10);
    EXPECT_GT(quad_form(f, u, u), 0.0);
  }
}

TEST(CovarianceFactor, WhitenColorRoundTrip) {
  RngStream rng(6, 0);
  const auto l = sample_uniform_square(60, 0, 10, rng);
  const Eigen::MatrixXd s = covariance_matrix({KernelFamily::Exponential, 1.0, 0.5, 0.3}, l);
  const SpdFactor f(s);
  Eigen::VectorXd v(60);
  for (int i = 0; i < 60; ++i) v(i) = rng.normal();
  EXPECT_TRUE(f.color(f.whiten(v)).isApprox(v, 1e-10));
  const Eigen::VectorXd w = f.whiten(v);
  EXPECT_NEAR(w.squaredNorm(), v.dot(s.ldlt().solve(v)), 1e-8);
}

TEST(ReplicatedFactor, MatchesDenseOnGrid) {
  const auto l = fixed_grid_locations(12, 4);
  const KernelSpec spec{KernelFamily::Exponential, 1.3, 0.4, 0.7};
  const auto fac = make_covariance_factor(spec, l);
  const Eigen::MatrixXd s = covariance_matrix(spec, l);
  const SpdFactor dense(s);
  EXPECT_NEAR(fac->log_det(), dense.log_det(), 1e-9);
  RngStream rng(7, 0);
  Eigen::MatrixXd b(48, 2);
  for (int i = 0; i < 48; ++i) {
    b(i, 0) = rng.normal();
    b(i, 1) = rng.normal();
  }
  EXPECT_TRUE(fac->solve(b).isApprox(s.ldlt().solve(b), 1e-9));
  const Eigen::MatrixXd w = fac->whiten(b);
  EXPECT_TRUE((w.transpose() * w).isApprox(b.transpose() * s.ldlt().solve(b), 1e-9));
  EXPECT_TRUE(fac->color(w).isApprox(b, 1e-9));
}

TEST(Vecchia, ExactWithFullConditioning) {
  RngStream rng(8, 0);
  const auto l = sample_uniform_square(80, 0, 10, rng);
  const KernelSpec spec{KernelFamily::Exponential, 1.0, 0.5, 0.2};
  const VecchiaFactor v(spec, l, 79);
  const Eigen::MatrixXd s = covariance_matrix(spec, l);
  EXPECT_NEAR(v.log_det(), SpdFactor(s).log_det(), 1e-8);
  Eigen::VectorXd b(80);
  for (int i = 0; i < 80; ++i) b(i) = rng.normal();
  EXPECT_TRUE(v.solve(b).isApprox(s.ldlt().solve(b), 1e-8));
  EXPECT_TRUE(v.color(v.whiten(b)).isApprox(b, 1e-10));
}

TEST(Vecchia, OrderIsFirstCoordinateSort) {
  RngStream rng(9, 0);
  const auto l = sample_uniform_square(30, 0, 10, rng);
  const VecchiaFactor v({KernelFamily::Exponential, 1.0, 0.5, 0.2}, l, 5);
  for (std::size_t i = 1; i < v.order().size(); ++i) {
    EXPECT_LE(l.coords()(v.order()[i - 1], 0), l.coords()(v.order()[i], 0));
  }
}
