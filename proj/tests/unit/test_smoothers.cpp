#include <gtest/gtest.h>

#include <cmath>

#include "spconf/error.hpp"
#include "spconf/geometry.hpp"
#include "spconf/smoothers.hpp"

using namespace spconf;

namespace {

Eigen::VectorXd noise(Eigen::Index n, RngStream& rng, double sd = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = sd * rng.normal();
  return v;
}

// Explicit hat matrix B (B^T B + lambda P)^{-1} B^T.
Eigen::MatrixXd hat_matrix(const SplineBasis& b, double lambda) {
  const Eigen::MatrixXd a = b.design.transpose() * b.design + lambda * b.penalty;
  return b.design * a.ldlt().solve(b.design.transpose());
}

}  // namespace

TEST(ThinPlate, RadialFunction) {
  EXPECT_EQ(thinplate_radial(1.0, 2), 0.0);
  EXPECT_EQ(thinplate_radial(0.0, 2), 0.0);
  EXPECT_NEAR(thinplate_radial(2.0, 2), 4.0 * std::log(2.0), 1e-15);
  EXPECT_EQ(thinplate_radial(2.0, 1), 8.0);
}

TEST(ThinPlate, MinimalRank) {
  RngStream rng(1, 0);
  const auto l = sample_uniform_square(20, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 4);
  EXPECT_EQ(b.design.cols(), 4);
  EXPECT_EQ(b.knots.rows(), 1);
  EXPECT_EQ(b.polynomial_columns, 3);
  EXPECT_TRUE(b.design.col(0).isOnes());
  EXPECT_EQ(b.design.col(1), l.coords().col(0));
  EXPECT_THROW(thinplate_basis(l, 3), InvalidArgument);
  EXPECT_THROW(thinplate_basis(l, 21), InvalidArgument);
}

TEST(ThinPlate, FullRankOnRandomLocations) {
  RngStream rng(2, 0);
  const auto l = sample_uniform_square(500, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 200);
  EXPECT_EQ(b.design.rows(), 500);
  EXPECT_EQ(b.design.cols(), 200);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b.design);
  EXPECT_EQ(qr.rank(), 200);
}

TEST(ThinPlate, PenaltyNullSpaceIsPolynomialBlock) {
  RngStream rng(3, 0);
  const auto l = sample_uniform_square(100, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 30);
  EXPECT_EQ(b.penalty.topRows(3).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(b.penalty.leftCols(3).cwiseAbs().maxCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.penalty);
  int zeros = 0;
  const double top = eig.eigenvalues().maxCoeff();
  for (int i = 0; i < 30; ++i) {
    EXPECT_GE(eig.eigenvalues()(i), -1e-10 * top);
    zeros += eig.eigenvalues()(i) < 1e-10 * top ? 1 : 0;
  }
  EXPECT_EQ(zeros, 3);
}

TEST(ThinPlate, KnotsAreDeterministicFarthestPoints) {
  RngStream rng(4, 0);
  const auto l = sample_uniform_square(50, 0, 10, rng);
  const auto k1 = farthest_point_knots(l.coords(), 10);
  const auto k2 = farthest_point_knots(l.coords(), 10);
  EXPECT_EQ(k1, k2);
  EXPECT_EQ(k1.front(), 0);
  // second knot is the farthest point from the first
  Eigen::Index far = 0;
  (l.coords().rowwise() - l.coords().row(0)).rowwise().squaredNorm().maxCoeff(&far);
  EXPECT_EQ(k1[1], far);
}

TEST(PenalizedFit, InterpolatesSquareBasis) {
  RngStream rng(5, 0);
  const auto l = sample_uniform_square(12, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 12);
  const Eigen::VectorXd y = noise(12, rng);
  const PenalizedFit f = penalized_fit(b, y, 0.0);
  EXPECT_LE(f.rss, 1e-16 * 1e6 * y.squaredNorm());
  EXPECT_NEAR(f.hat_trace, 12.0, 1e-9);
}

TEST(PenalizedFit, ExactRepresentation) {
  RngStream rng(6, 0);
  const auto l = sample_uniform_square(100, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 25);
  const Eigen::VectorXd y = b.design * noise(25, rng);
  EXPECT_LE(penalized_fit(b, y, 0.0).rss, 1e-16 * y.squaredNorm() * 100);
}

TEST(PenalizedFit, LargeLambdaGivesPolynomialProjection) {
  RngStream rng(7, 0);
  const auto l = sample_uniform_square(150, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 30);
  const Eigen::VectorXd y = noise(150, rng);
  const Eigen::MatrixXd poly = b.design.leftCols(3);
  const Eigen::VectorXd proj = poly * poly.colPivHouseholderQr().solve(y);
  const PenalizedFit f = penalized_fit(b, y, 1e14);
  EXPECT_TRUE(f.fitted.isApprox(proj, 1e-6));
  EXPECT_NEAR(f.hat_trace, 3.0, 1e-6);
}

TEST(PenalizedFit, MatchesExplicitHatMatrix) {
  RngStream rng(8, 0);
  const auto l = sample_uniform_square(50, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 15);
  const Eigen::VectorXd y = noise(50, rng);
  for (double lambda : {0.0, 0.01, 1.0, 100.0}) {
    const Eigen::MatrixXd h = hat_matrix(b, lambda);
    EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-8);
    const PenalizedFit f = penalized_fit(b, y, lambda);
    EXPECT_LE((f.fitted - h * y).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(f.hat_trace, h.trace(), 1e-8);
    EXPECT_NEAR(f.rss, (y - h * y).squaredNorm(), 1e-8);
    const Eigen::MatrixXd a = b.design.transpose() * b.design + lambda * b.penalty;
    EXPECT_TRUE(f.coefficients.isApprox(a.ldlt().solve(b.design.transpose() * y), 1e-6));
  }
}

TEST(PenalizedFit, RankDeficientDesignRejected) {
  Eigen::MatrixXd d(5, 2);
  d << 1, 2, 1, 2, 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(penalized_fit(d, Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Ones(5), 0.0), NumericalError);
}

TEST(Gcv, FormulaValue) {
  EXPECT_DOUBLE_EQ(gcv_score(1.0, 10, 2.0), 0.15625);
  EXPECT_TRUE(std::isnan(gcv_score(1.0, 10, 10.0)));
}

TEST(Gcv, GridShape) {
  const auto g = lambda_grid(100);
  ASSERT_EQ(g.size(), 40u);
  EXPECT_NEAR(g.front(), 100 * 1e-8, 1e-18);
  EXPECT_NEAR(g.back(), 100 * 1e4, 1e-6);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
}

TEST(Gcv, SelectsMinimumOnGrid) {
  RngStream rng(9, 0);
  const auto l = sample_uniform_square(300, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 40);
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) y(i) = std::sin(l.coords()(i, 0)) + 0.3 * rng.normal();
  const auto grid = lambda_grid(300);
  const GcvSelection s = select_lambda_gcv(b, y, grid);
  double best = std::numeric_limits<double>::infinity();
  for (double lam : grid) {
    const PenalizedFit f = penalized_fit(b, y, lam);
    best = std::min(best, gcv_score(f.rss, 300, f.hat_trace));
  }
  EXPECT_NEAR(gcv_score(s.fit.rss, 300, s.fit.hat_trace), best, 1e-12 * best);
  for (double sc : s.scores) EXPECT_TRUE(std::isfinite(sc));
}

TEST(Gcv, SingleElementGrid) {
  RngStream rng(10, 0);
  const auto l = sample_uniform_square(60, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 10);
  EXPECT_EQ(select_lambda_gcv(b, noise(60, rng), {3.5}).lambda, 3.5);
}

TEST(Gcv, PolynomialSignalAllowsLargestLambda) {
  RngStream rng(11, 0);
  const auto l = sample_uniform_square(200, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 30);
  Eigen::VectorXd y = 1.0 + 0.5 * l.coords().col(0).array() - 0.2 * l.coords().col(1).array();
  y += 0.5 * noise(200, rng);
  const auto grid = lambda_grid(200);
  const GcvSelection s = select_lambda_gcv(b, y, grid);
  EXPECT_GE(s.lambda, grid.front());
  EXPECT_LE(s.lambda, grid.back());
}

TEST(Gcv, TiesGoToLargerLambda) {
  // y = 0 scores zero at every lambda.
  RngStream rng(12, 0);
  const auto l = sample_uniform_square(80, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 12);
  const GcvSelection s = select_lambda_gcv(b, Eigen::VectorXd::Zero(80), {5.0, 0.5, 50.0, 1.0});
  EXPECT_EQ(s.lambda, 50.0);
}

TEST(Gcv, UndefinedEverywhereThrows) {
  RngStream rng(13, 0);
  const auto l = sample_uniform_square(10, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 10);
  EXPECT_THROW(select_lambda_gcv(b, noise(10, rng), {1e-30}), NumericalError);
}

TEST(Gcv, HatTraceMonotone) {
  RngStream rng(14, 0);
  const auto l = sample_uniform_square(120, 0, 10, rng);
  const SplineBasis b = thinplate_basis(l, 40);
  const PenalizedSpectrum sp(b.design, b.penalty);
  double prev = sp.hat_trace(0.0);
  for (double lam : lambda_grid(120)) {
    const double t = sp.hat_trace(lam);
    EXPECT_LE(t, prev + 1e-12);
    EXPECT_GT(t, 0.0);
    prev = t;
  }
}
