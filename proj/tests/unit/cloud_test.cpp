#include "graphcarve/cloud.hpp"
#include "graphcarve/error.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace graphcarve;

namespace {

WeightedCloud line_cloud(const std::vector<double>& xs, double weight, double res, int d = 2) {
  Mat pts = Mat::Zero(d, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) pts(0, static_cast<Eigen::Index>(i)) = xs[i];
  return WeightedCloud(1, pts, Vec::Constant(static_cast<Eigen::Index>(xs.size()), weight), res);
}

std::vector<double> uniform_segment(std::size_t count) {
  std::vector<double> xs;
  for (std::size_t i = 0; i < count; ++i) xs.push_back((static_cast<double>(i) + 0.5) / static_cast<double>(count));
  return xs;
}

}  // namespace

TEST(WeightedCloud, Validation) {
  Mat pts(2, 2);
  pts << 0, 1, 0, 0;
  EXPECT_THROW(WeightedCloud(1, pts, Vec::Constant(2, -1.0), 0.1), InputError);
  EXPECT_THROW(WeightedCloud(2, pts, Vec::Constant(2, 1.0), 0.1), InputError);
  EXPECT_THROW(WeightedCloud(1, pts, Vec::Constant(3, 1.0), 0.1), InputError);
  pts(0, 1) = 1e-5;
  EXPECT_THROW(WeightedCloud(1, pts, Vec::Constant(2, 1.0), 0.1), InputError);
  pts(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(WeightedCloud(1, pts, Vec::Constant(2, 1.0), 0.1), InputError);
}

TEST(WeightedCloud, MergedFoldsDuplicates) {
  Mat pts(2, 4);
  pts << 0, 1, 0, 1, 0, 0, 0, 0;
  const WeightedCloud c = WeightedCloud::merged(1, pts, Vec::Constant(4, 0.5), 0.1);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_DOUBLE_EQ(c.weight(0), 1.0);
  EXPECT_DOUBLE_EQ(c.total_mass(), 2.0);
}

TEST(GridIndex, BallQueryMatchesOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d = 2; d <= 4; ++d) {
    Mat pts(d, 400);
    for (Eigen::Index p = 0; p < pts.cols(); ++p) {
      for (int i = 0; i < d; ++i) pts(i, p) = u(rng);
    }
    const WeightedCloud c(1, pts, Vec::Ones(400), 0.01);
    for (int q = 0; q < 200; ++q) {
      Vec centre(d);
      for (int i = 0; i < d; ++i) centre[i] = u(rng);
      const double r = 0.5 * (u(rng) + 1.0);
      EXPECT_EQ(ball_query(c, centre.data(), r), ball_query_oracle(c, centre.data(), r));
    }
  }
}

TEST(SubsetOps, SortedSetAlgebra) {
  const Subset a{1, 3, 5, 7};
  const Subset b{3, 4, 5};
  EXPECT_EQ(subset_difference(a, b), (Subset{1, 7}));
  EXPECT_EQ(subset_union(a, b), (Subset{1, 3, 4, 5, 7}));
  EXPECT_EQ(subset_intersection(a, b), (Subset{3, 5}));
}

TEST(AdrCheck, UniformGridWithinBand) {
  const int side = 100;
  const double h = 1.0 / side;
  Mat pts = Mat::Zero(3, side * side);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      pts(0, i * side + j) = (i + 0.5) * h;
      pts(1, i * side + j) = (j + 0.5) * h;
    }
  }
  const WeightedCloud c(2, pts, Vec::Constant(side * side, h * h), h);
  const AdrReport r = adr_check(c, all_points(c), ScaleRange::within(10 * h, 1.0));
  EXPECT_GE(r.c1_hat, 0.5);
  EXPECT_LE(r.c2_hat, 4.0);
  // Direct counting oracle for one point and one scale.
  const double radius = scale_radius(3);
  std::size_t inside = 0;
  for (int p = 0; p < side * side; ++p) inside += (pts.col(p) - pts.col(0)).norm() <= radius ? 1 : 0;
  const DensityProfile prof = density_profile(c, all_points(c), ScaleRange{3, 3});
  EXPECT_NEAR(prof.at(0, 3), static_cast<double>(inside) * h * h, 1e-12);
}

TEST(AdrCheck, SinglePoint) {
  const WeightedCloud c = line_cloud({0.0}, 0.25, 0.1);
  const AdrReport r = adr_check(c, all_points(c), ScaleRange{0, 2});
  EXPECT_DOUBLE_EQ(r.c1_hat, 0.25);
  EXPECT_DOUBLE_EQ(r.c2_hat, 0.25 / scale_radius(2));
}

TEST(AdrCheck, ConcatenatedCloudDoublesUpperConstant) {
  const std::vector<double> xs = uniform_segment(200);
  const WeightedCloud c = line_cloud(xs, 1.0 / 200, 1.0 / 200);
  Mat twice(2, 400);
  twice << c.points(), c.points();
  const WeightedCloud both = WeightedCloud::merged(1, twice, Vec::Constant(400, 1.0 / 200), 1.0 / 200);
  const ScaleRange scales = ScaleRange::within(0.05, 1.0);
  const double single = adr_check(c, all_points(c), scales).c2_hat;
  const double doubled = adr_check(both, all_points(both), scales).c2_hat;
  EXPECT_NEAR(doubled, 2.0 * single, 1e-12);
}

TEST(AdrCheck, BandViolations) {
  const WeightedCloud c = line_cloud({0.0, 0.5}, 1.0, 0.1);
  const AdrReport r = adr_check(c, all_points(c), ScaleRange{0, 1}, std::make_pair(2.5, 10.0));
  EXPECT_FALSE(r.violations.empty());
}

TEST(Prune, DenseSegmentKeepsEverything) {
  const WeightedCloud c = line_cloud(uniform_segment(500), 1.0 / 500, 1.0 / 500);
  const PruneResult r = prune_low_density(c, all_points(c), 0.1, ScaleRange::within(0.01, 1.0));
  EXPECT_EQ(r.removed_mass, 0.0);
  EXPECT_EQ(r.kept.size(), 500u);
}

TEST(Prune, IsolatedPointRemoved) {
  std::vector<double> xs = uniform_segment(500);
  xs.push_back(3.0);
  Mat pts = Mat::Zero(2, 501);
  for (int i = 0; i < 501; ++i) pts(0, i) = xs[static_cast<std::size_t>(i)];
  Vec w = Vec::Constant(501, 1.0 / 500);
  w[500] = 0.001;
  const WeightedCloud c(1, pts, w, 1.0 / 500);
  const ScaleRange scales = ScaleRange::within(0.01, 1.0);
  // The outlier sees only itself: m / r <= 0.001 / 0.0078 < 0.2; the segment's worst ratio is about 0.5.
  const PruneResult r = prune_low_density(c, all_points(c), 0.2, scales);
  EXPECT_EQ(subset_difference(all_points(c), r.kept), (Subset{500}));
  EXPECT_DOUBLE_EQ(r.removed_mass, 0.001);
  EXPECT_NEAR(r.k_estimate, 0.001 / 0.2, 1e-15);
}

TEST(Prune, HugeEpsRemovesEverything) {
  const WeightedCloud c = line_cloud(uniform_segment(50), 0.02, 0.02);
  const PruneResult r = prune_low_density(c, all_points(c), 1e9, ScaleRange::within(0.05, 1.0));
  EXPECT_TRUE(r.kept.empty());
  EXPECT_NEAR(r.removed_mass, 1.0, 1e-12);
}

TEST(SeparatedNet, GreedyScan) {
  const WeightedCloud c = line_cloud({0.0, 0.4, 0.9, 1.0}, 1.0, 0.05);
  EXPECT_EQ(separated_net(c, 0.5), (Subset{0, 2}));
  EXPECT_EQ(separated_net(c, 0.05), (Subset{0, 1, 2, 3}));
}

TEST(SeparatedNet, SeededNetsNest) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat pts(2, 300);
  for (Eigen::Index p = 0; p < 300; ++p) pts.col(p) << u(rng), u(rng);
  const WeightedCloud c(1, pts, Vec::Ones(300), 1e-4);
  Subset a;
  for (std::size_t i = 0; i < 150; ++i) a.push_back(i);
  const Subset net_a = separated_net(c, 0.1, a);
  const Subset net_all = separated_net(c, 0.1, std::nullopt, net_a);
  EXPECT_TRUE(subset_difference(net_a, net_all).empty());
  for (std::size_t i = 0; i < net_all.size(); ++i) {
    for (std::size_t j = i + 1; j < net_all.size(); ++j) {
      EXPECT_GT(std::sqrt(squared_distance(c.point(net_all[i]), c.point(net_all[j]), 2)), 0.1);
    }
  }
}

TEST(Pushforward, UniformSegmentHasUnitDensity) {
  const WeightedCloud c = line_cloud(uniform_segment(1000), 1e-3, 1e-3);
  const Pushforward p = pushforward_density(c, all_points(c), Subspace::base_plane(2, 1), 0.1);
  EXPECT_NEAR(p.l2_sq, 1.0, 0.1);
  EXPECT_NEAR(p.mass, 1.0, 1e-12);
  EXPECT_EQ(p.bins.size(), 10u);
}

TEST(Pushforward, PointMassAndCollapse) {
  const WeightedCloud one = line_cloud({0.3}, 2.0, 0.1);
  const Pushforward p = pushforward_density(one, all_points(one), Subspace::base_plane(2, 1), 0.1);
  EXPECT_EQ(p.bins.size(), 1u);
  EXPECT_NEAR(p.l2_sq, 4.0 / 0.1, 1e-9);
  const WeightedCloud seg = line_cloud(uniform_segment(100), 0.01, 0.01);
  const Pushforward q = pushforward_density(seg, all_points(seg), Subspace::vertical_axis(2, 1), 0.1);
  EXPECT_EQ(q.bins.size(), 1u);
  EXPECT_NEAR(q.linf, 1.0 / 0.1, 1e-9);
  EXPECT_THROW(pushforward_density(seg, all_points(seg), Subspace::base_plane(2, 1), 0.001), InputError);
}

TEST(ProjectionEnergy, FlatSegment) {
  const WeightedCloud c = line_cloud(uniform_segment(1000), 1e-3, 1e-3);
  const EnergyEstimate e = projection_energy(c, all_points(c), Subspace::base_plane(2, 1), 0.2, 64, 0.02, 3);
  EXPECT_GE(e.mean_l2_sq, 0.5);
  EXPECT_LE(e.mean_l2_sq, 2.0);
  EXPECT_EQ(e.per_sample.size(), 64u);
  for (double dist : e.distances) EXPECT_LE(dist, 0.2);
}

TEST(ProjectionEnergy, EmptySubsetIsZero) {
  const WeightedCloud c = line_cloud(uniform_segment(10), 0.1, 0.1);
  const EnergyEstimate e = projection_energy(c, {}, Subspace::base_plane(2, 1), 0.2, 16, 0.1, 3);
  EXPECT_EQ(e.mean_l2_sq, 0.0);
}

TEST(TripleCount, VerticalPair) {
  Mat pts(2, 2);
  pts << 0, 0, 0, 1;
  const WeightedCloud c(1, pts, Vec::Ones(2), 0.1);
  const TripleCount t = triple_count(c, {0, 1}, {0, 1}, 1.0, 0.1, 200000, 5);
  const double angle = 2.0 / std::numbers::pi * std::asin(0.1);
  EXPECT_NEAR(t.ball_measure, 1.0, 1e-12);
  EXPECT_NEAR(t.lhs_estimate, 2.0 + 2.0 * angle, 0.01);
  const TripleCount diag = triple_count(c, {0, 1}, {0, 1}, 1.0, 0.0, 20000, 5);
  EXPECT_NEAR(diag.lhs_estimate, 2.0 * diag.ball_measure, 1e-12);
}

TEST(TripleCount, IgnoresWeights) {
  Mat pts(2, 3);
  pts << 0, 0, 0.5, 0, 1, 0.2;
  const WeightedCloud a(1, pts, Vec::Ones(3), 0.1);
  const WeightedCloud b(1, pts, Vec::Constant(3, 2.0), 0.1);
  const TripleCount ta = triple_count(a, {0, 1, 2}, {0}, 0.5, 0.1, 5000, 9);
  const TripleCount tb = triple_count(b, {0, 1, 2}, {0}, 0.5, 0.1, 5000, 9);
  EXPECT_EQ(ta.lhs_estimate, tb.lhs_estimate);
  EXPECT_EQ(ta.lower_part, tb.lower_part);
}
