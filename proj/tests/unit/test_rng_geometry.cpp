#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "spconf/error.hpp"
#include "spconf/geometry.hpp"
#include "spconf/rng.hpp"

using namespace spconf;

TEST(RngStream, SameKeyReproducesSequence) {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RngStream, DistinctStreamsDiffer) {
  RngStream a(42, 1);
  RngStream b(42, 2);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += a() == b() ? 1 : 0;
  EXPECT_EQ(equal, 0);
}

TEST(RngStream, SubstreamsAreKeyedByPurpose) {
  const RngStream root(9, 3);
  RngStream x = root.substream("noise");
  RngStream y = root.substream("noise");
  RngStream z = root.substream("locations");
  const auto vx = x();
  EXPECT_EQ(vx, y());
  EXPECT_NE(vx, z());
}

TEST(RngStream, UniformMoments) {
  RngStream rng(1, 0);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  const double m = s / n;
  EXPECT_NEAR(m, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(s2 / n - m * m, 1.0 / 12.0, 0.002);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(2, 0);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  // var of the sample second moment is 2/n
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(RngStream, BelowStaysInRangeAndCoversIt) {
  RngStream rng(3, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(UniformSquare, DeterministicForSeed) {
  RngStream a(7, 0);
  RngStream b(7, 0);
  const auto l1 = sample_uniform_square(4, 0.0, 10.0, a);
  const auto l2 = sample_uniform_square(4, 0.0, 10.0, b);
  EXPECT_EQ(l1.coords(), l2.coords());
  EXPECT_EQ(l1.dim(), 2);
  EXPECT_TRUE(std::holds_alternative<UniformSquare>(l1.density()));
}

TEST(UniformSquare, MeanNearCentre) {
  RngStream rng(11, 0);
  const auto l = sample_uniform_square(10000, 0.0, 10.0, rng);
  const Eigen::VectorXd m = l.coords().colwise().mean();
  EXPECT_NEAR(m(0), 5.0, 0.2);
  EXPECT_NEAR(m(1), 5.0, 0.2);
  // second moment: var = 100/12
  const double v = (l.coords().col(0).array() - m(0)).square().mean();
  EXPECT_NEAR(v, 100.0 / 12.0, 4.0 * 100.0 / std::sqrt(180.0 * 10000));
}

TEST(UniformSquare, SinglePointInBounds) {
  RngStream rng(5, 0);
  const auto l = sample_uniform_square(1, 0.0, 0.5, rng);
  ASSERT_EQ(l.size(), 1);
  for (int j = 0; j < 2; ++j) {
    EXPECT_GE(l.coords()(0, j), 0.0);
    EXPECT_LE(l.coords()(0, j), 0.5);
  }
}

TEST(UniformSquare, RejectsBadBounds) {
  RngStream rng(5, 0);
  EXPECT_THROW(sample_uniform_square(3, 1.0, 1.0, rng), InvalidArgument);
  EXPECT_THROW(sample_uniform_square(0, 0.0, 1.0, rng), InvalidArgument);
}

TEST(GaussianLine, VarianceNearOne) {
  RngStream rng(13, 0);
  const auto l = sample_gaussian_line(3000, 1.0, rng);
  EXPECT_EQ(l.dim(), 1);
  const double m = l.coords().col(0).mean();
  const double v = (l.coords().col(0).array() - m).square().sum() / 2999.0;
  EXPECT_GE(v, 0.9);
  EXPECT_LE(v, 1.1);
}

TEST(GaussianLine, Reproducible) {
  RngStream a(3, 0);
  RngStream b(3, 0);
  EXPECT_EQ(sample_gaussian_line(5, 1.0, a).coords(), sample_gaussian_line(5, 1.0, b).coords());
}

TEST(GaussianLine, RejectsZeroSd) {
  RngStream rng(3, 0);
  EXPECT_THROW(sample_gaussian_line(2, 0.0, rng), InvalidArgument);
}

TEST(FixedGrid, SmallLayout) {
  const auto l = fixed_grid_locations(3, 2);
  ASSERT_EQ(l.size(), 6);
  const std::vector<double> want{1, 1, 2, 2, 3, 3};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(l.coords()(i, 0), want[static_cast<std::size_t>(i)]);
  ASSERT_TRUE(l.groups().has_value());
  const std::vector<std::int64_t> groups{1, 1, 2, 2, 3, 3};
  EXPECT_EQ(*l.groups(), groups);
}

TEST(FixedGrid, PaperSize) {
  EXPECT_EQ(fixed_grid_locations(300, 10).size(), 3000);
  const auto one = fixed_grid_locations(1, 1);
  ASSERT_EQ(one.size(), 1);
  EXPECT_EQ(one.coords()(0, 0), 1.0);
}

TEST(Distances, OneDimensional) {
  Eigen::MatrixXd c(3, 1);
  c << 0, 3, 4;
  const LocationSet l(c, GaussianLine{1.0});
  Eigen::MatrixXd want(3, 3);
  want << 0, 3, 4, 3, 0, 1, 4, 1, 0;
  EXPECT_TRUE(distance_matrix(l).isApprox(want));
}

TEST(Distances, PythagoreanTriple) {
  Eigen::MatrixXd c(2, 2);
  c << 0, 0, 3, 4;
  const LocationSet l(c, UniformSquare{0, 10});
  EXPECT_DOUBLE_EQ(distance_matrix(l)(0, 1), 5.0);
}

TEST(Distances, SymmetricZeroDiagonalTriangle) {
  RngStream rng(17, 0);
  const auto l = sample_uniform_square(40, 0.0, 10.0, rng);
  const Eigen::MatrixXd d = distance_matrix(l);
  EXPECT_EQ(d, d.transpose());
  EXPECT_EQ(d.diagonal().cwiseAbs().maxCoeff(), 0.0);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      for (int k = 0; k < 40; ++k) ASSERT_LE(d(i, k), d(i, j) + d(j, k) + 1e-12);
    }
  }
}

TEST(CollapseSites, GroupsCoincidentPoints) {
  const auto l = fixed_grid_locations(4, 3);
  const SiteMap s = collapse_sites(l.coords());
  EXPECT_EQ(s.sites.rows(), 4);
  EXPECT_TRUE(s.has_replicates());
  for (auto c : s.counts) EXPECT_EQ(c, 3);
  EXPECT_EQ(s.site_of[5], 1);
}
