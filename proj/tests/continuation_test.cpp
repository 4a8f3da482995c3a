#include "geonet/continuation.hpp"
#include "geonet/shapes.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace geonet;

namespace {

double max_vertex_gap(const GammaNet& a, const GammaNet& b) {
  double worst = 0.0;
  for (int v : a.graph().vertices())
    worst = std::max(worst, a.manifold().ambient_delta(a.position(v), b.position(v)).norm());
  return worst;
}

double max_point_gap(const GammaNet& a, const GammaNet& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.points().size(); ++i)
    worst = std::max(worst, a.manifold().ambient_delta(a.points()[i], b.points()[i]).norm());
  return worst;
}

ContinuationOptions report_mode() {
  ContinuationOptions o;
  o.on_degenerate = OnDegenerate::Report;
  return o;
}

TEST(Continuation, ZeroBumpKeepsTheNet) {
  auto m = make_round_sphere();
  const auto net0 = theta_net(m);
  MetricFamily fam(m, Bump{Bump::Kind::Zero, {}, 1.0, 0.0}, 0.5);
  const auto r = continue_net(net0, fam, uniform_grid(0.5, 5), report_mode());
  ASSERT_EQ(r.points.size(), 6u);
  for (const auto& p : r.points) {
    EXPECT_LT(max_point_gap(net0, p.net), 1e-10);
    EXPECT_NEAR(p.report.length, 3 * kPi, 1e-10);
  }
}

TEST(Continuation, DisjointBumpKeepsTheNet) {
  auto m = make_round_sphere();
  const auto net0 = theta_net(m);
  // Centered between two meridians on the equator, well away from all three.
  const ChartPoint c = ray_point(*m, {std::cos(kPi / 3), std::sin(kPi / 3), 0});
  MetricFamily fam(m, Bump{Bump::Kind::Smooth, c, 0.3, 1.0}, 0.5);
  const auto r = continue_net(net0, fam, uniform_grid(0.5, 5), report_mode());
  ASSERT_EQ(r.points.size(), 6u);
  for (const auto& p : r.points) EXPECT_LT(max_point_gap(net0, p.net), 1e-10);
}

TEST(Continuation, ConstantFactorScalesLength) {
  auto m = make_ellipsoid(1.0, 1.3, 0.8);
  const auto net0 = great_circle_net(m, {0, 0, 1}, {1, 0, 0}, 12);
  MetricFamily fam(m, Bump{Bump::Kind::Constant, {}, 1.0, 1.0}, 1.0);
  const auto r = continue_net(net0, fam, uniform_grid(1.0, 4));
  ASSERT_FALSE(r.halted) << r.halt_reason;
  ASSERT_EQ(r.points.size(), 5u);
  const double l0 = net_length(net0);
  for (const auto& row : length_along_family(r.points)) EXPECT_NEAR(row.length, std::sqrt(1 + row.t) * l0, 1e-9);
  for (const auto& p : r.points) EXPECT_LT(max_point_gap(net0, p.net), 1e-10);
}

TEST(Continuation, ThetaWithMeridianBumpMatchesFreshSolves) {
  auto m = make_round_sphere();
  const auto net0 = theta_net(m);
  MetricFamily fam(m, Bump{Bump::Kind::Smooth, ray_point(*m, {1, 0, 0}), 0.5, 1.0}, 0.1);
  const auto r = continue_net(net0, fam, uniform_grid(0.1, 20), report_mode());
  ASSERT_EQ(r.points.size(), 21u);
  const auto rows = length_along_family(r.points);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].defect, 1e-8);
    if (i > 0) {
      EXPECT_GT(rows[i].length, rows[i - 1].length);
    }
  }
  for (std::size_t i : {5u, 10u, 20u}) {
    const auto& p = r.points[i];
    const auto fresh = stationarize(net0.with_manifold(fam.at(p.t))).net;
    EXPECT_LT(max_vertex_gap(p.net, fresh), 1e-6) << "t = " << p.t;
    EXPECT_NEAR(net_length(p.net), net_length(fresh), 1e-8);
  }
}

TEST(Continuation, OffAxisBumpMovesNondegenerateEquator) {
  auto m = make_ellipsoid(1.0, 1.3, 0.8);
  const auto net0 = great_circle_net(m, {0, 0, 1}, {1, 0, 0}, 12);
  const ChartPoint c = ray_point(*m, Vec3(std::cos(0.3), std::sin(0.3), 0.3));
  MetricFamily fam(m, Bump{Bump::Kind::Smooth, c, 0.8, 1.0}, 0.2);
  const auto r = continue_net(net0, fam, uniform_grid(0.2, 8));
  ASSERT_FALSE(r.halted) << r.halt_reason;
  ASSERT_EQ(r.points.size(), 9u);
  int iterations = 0;
  for (const auto& p : r.points) {
    EXPECT_LT(p.report.max_defect, 1e-8);
    iterations += p.corrector_iterations;
  }
  EXPECT_GT(iterations, 0);
  EXPECT_GT(max_point_gap(net0, r.points.back().net), 1e-3);
  for (std::size_t i : {4u, 8u}) {
    const auto& p = r.points[i];
    const auto fresh = stationarize(r.points[i - 1].net.with_manifold(fam.at(p.t))).net;
    // The loop vertex may slide along the curve; compare images.
    EXPECT_LT(oracle::hausdorff(p.net, fresh), 1e-6) << "t = " << p.t;
    EXPECT_NEAR(net_length(p.net), net_length(fresh), 1e-8);
  }
}

TEST(Continuation, HaltsAtDegenerateNet) {
  auto m = make_round_sphere();
  MetricFamily fam(m, Bump{Bump::Kind::Zero, {}, 1.0, 0.0}, 0.1);
  const auto r = continue_net(theta_net(m), fam, uniform_grid(0.1, 2));
  EXPECT_TRUE(r.halted);
  EXPECT_TRUE(r.points.empty());
  EXPECT_EQ(r.critical_hi, 0.0);
}

TEST(Continuation, TorusLoopBesideBumpStaysPut) {
  auto m = make_flat_torus();
  // The bump misses the loop, so it stays a closed geodesic of every g_t.
  const auto net0 = torus_loop(m, 1, 0, {0.0, 1.0});
  MetricFamily fam(m, Bump{Bump::Kind::Smooth, ChartPoint{0, {1.0, 3.0}}, 0.5, 1.0}, 0.2);
  const auto r = continue_net(net0, fam, uniform_grid(0.2, 4), report_mode());
  ASSERT_EQ(r.points.size(), 5u);
  for (const auto& p : r.points) EXPECT_NEAR(p.report.length, 2 * kPi, 1e-10);
}

TEST(Continuation, RejectsBadGrids) {
  auto m = make_round_sphere();
  MetricFamily fam(m, Bump{Bump::Kind::Zero, {}, 1.0, 0.0}, 0.1);
  for (const std::vector<double>& g : {std::vector<double>{}, std::vector<double>{0.05, 0.1},
                                       std::vector<double>{0.0, 0.1, 0.05}, std::vector<double>{0.0, 0.2}}) {
    try {
      continue_net(theta_net(m), fam, g);
      ADD_FAILURE() << "grid accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
  }
}

}  // namespace
