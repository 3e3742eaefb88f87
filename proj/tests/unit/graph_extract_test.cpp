#include "graphcarve/error.hpp"
#include "graphcarve/graph_extract.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace graphcarve;

namespace {

WeightedCloud planar(const std::vector<std::pair<double, double>>& xy, double res = 0.01) {
  Mat pts(2, static_cast<Eigen::Index>(xy.size()));
  for (std::size_t i = 0; i < xy.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) << xy[i].first, xy[i].second;
  return WeightedCloud(1, pts, Vec::Ones(static_cast<Eigen::Index>(xy.size())), res);
}

Vec scalar(double t) { return Vec::Constant(1, t); }

}  // namespace

TEST(CertifyGraph, FlatLineHasZeroSlope) {
  std::vector<std::pair<double, double>> xy;
  for (int i = 0; i < 20; ++i) xy.emplace_back(i * 0.05, 0.0);
  const GraphModel g = certify_graph(planar(xy), all_points(planar(xy)), 0.5);
  EXPECT_EQ(g.lipschitz, 0.0);
  EXPECT_EQ(g.size(), 20u);
  EXPECT_NEAR(g.bound, std::sqrt(0.75) / 0.5, 1e-15);
}

TEST(CertifyGraph, TwoPointSlope) {
  const WeightedCloud c = planar({{0.0, 0.0}, {1.0, 0.3}});
  const GraphModel g = certify_graph(c, all_points(c), 0.9);
  EXPECT_NEAR(g.lipschitz, 0.3, 1e-15);
  EXPECT_NEAR(g.inflated_lipschitz(), 0.3, 1e-15);
}

TEST(CertifyGraph, AbsoluteValueSample) {
  std::vector<std::pair<double, double>> xy;
  for (int i = -50; i <= 50; ++i) xy.emplace_back(i * 0.02, 0.3 * std::abs(i * 0.02));
  const WeightedCloud c = planar(xy);
  const GraphModel g = certify_graph(c, all_points(c), 0.9);
  EXPECT_NEAR(g.lipschitz, 0.3, 1e-12);
  EXPECT_LE(g.lipschitz, g.bound);
}

TEST(CertifyGraph, NonGraphThrows) {
  const WeightedCloud c = planar({{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}});
  EXPECT_THROW(certify_graph(c, all_points(c), 0.5), InputError);
  EXPECT_THROW(certify_graph(c, {0, 2}, 0.0), InputError);
  EXPECT_NO_THROW(certify_graph(c, {0, 2}, 0.5));
}

TEST(CertifyGraph, HigherCodimension) {
  Mat pts(3, 3);
  pts << 0, 1, 2, 0, 0.2, 0.2, 0, 0, 0.4;
  const WeightedCloud c(1, pts, Vec::Ones(3), 0.01);
  const GraphModel g = certify_graph(c, all_points(c), 0.5);
  EXPECT_EQ(g.values.rows(), 2);
  double oracle = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < a; ++b) {
      const Vec diff = pts.col(a) - pts.col(b);
      oracle = std::max(oracle, diff.tail(2).norm() / std::abs(diff[0]));
    }
  }
  EXPECT_NEAR(g.lipschitz, oracle, 1e-12);
  EXPECT_NEAR(g.lipschitz, 0.4, 1e-12);
  EXPECT_NEAR(g.inflated_lipschitz(), std::sqrt(2.0) * g.lipschitz, 1e-15);
}

TEST(ExtendMcshane, ExamplesAndExactSites) {
  const WeightedCloud c = planar({{0.0, 0.0}, {1.0, 1.0}});
  const GraphModel g = certify_graph(c, all_points(c), 0.5);
  EXPECT_NEAR(extend_mcshane(g, scalar(2.0))[0], 1.0, 1e-12);
  EXPECT_NEAR(extend_mcshane(g, scalar(0.5))[0], 0.5, 1e-12);
  EXPECT_EQ(extend_mcshane(g, scalar(0.0))[0], 0.0);
  EXPECT_EQ(extend_mcshane(g, scalar(1.0))[0], 1.0);
  EXPECT_THROW(extend_mcshane(g, Vec::Zero(2)), InputError);
}

TEST(ExtendMcshane, ConstantSamplesGiveConstant) {
  const WeightedCloud c = planar({{0.0, 0.7}, {0.4, 0.7}, {1.3, 0.7}});
  const GraphModel g = certify_graph(c, all_points(c), 0.5);
  for (double t : {-3.0, 0.1, 0.9, 5.0}) EXPECT_NEAR(extend_mcshane(g, scalar(t))[0], 0.7, 1e-15);
}

TEST(ExtendMcshane, RespectsLipschitzConstant) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> xy;
  double y = 0.0;
  for (int i = 0; i < 40; ++i) {
    y += 0.2 * (u(rng) - 0.5) * 0.05;
    xy.emplace_back(i * 0.05, y);
  }
  const WeightedCloud c = planar(xy);
  const GraphModel g = certify_graph(c, all_points(c), 0.5);
  for (int t = 0; t < 500; ++t) {
    const double a = 2.5 * u(rng) - 0.25;
    const double b = 2.5 * u(rng) - 0.25;
    const double fa = extend_mcshane(g, scalar(a))[0];
    const double fb = extend_mcshane(g, scalar(b))[0];
    EXPECT_LE(std::abs(fa - fb), g.lipschitz * std::abs(a - b) + 1e-12);
  }
}

TEST(Containment, SelfAndOutliers) {
  std::vector<std::pair<double, double>> xy;
  for (int i = 0; i < 10; ++i) xy.emplace_back(i * 0.1, 0.0);
  xy.emplace_back(0.55, 0.5);
  xy.emplace_back(0.35, -0.5);
  const WeightedCloud c = planar(xy);
  Subset graph(10);
  for (std::size_t i = 0; i < 10; ++i) graph[i] = i;
  const GraphModel g = certify_graph(c, graph, 0.5);
  const ContainmentReport self = containment_report(c, graph, g, 0.0);
  EXPECT_EQ(self.fraction, 1.0);
  const ContainmentReport all = containment_report(c, all_points(c), g, 0.0);
  EXPECT_NEAR(all.fraction, 10.0 / 12.0, 1e-15);
  EXPECT_NEAR(all.contained_mass, 10.0, 1e-15);
  EXPECT_NEAR(containment_report(c, all_points(c), g, 0.5).fraction, 1.0, 1e-15);
  EXPECT_THROW(containment_report(c, graph, g, -1.0), InputError);
}

TEST(GraphGridCsv, HeaderAndRows) {
  const WeightedCloud c = planar({{0.0, 0.0}, {1.0, 0.5}});
  const GraphModel g = certify_graph(c, all_points(c), 0.5);
  std::istringstream in(graph_grid_csv(g, 5));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t1,A1");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
  EXPECT_EQ(graph_grid_csv(GraphModel{.d = 3, .n = 1}, 4), "t1,A1,A2\n");
}
