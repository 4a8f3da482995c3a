#include "geonet/shapes.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace geonet;

namespace {

// Fermat point of a triangle by grid search then compass refinement of the
// Euclidean distance sum. Independent of the net machinery.
Vec2 fermat_point(const std::array<Vec2, 3>& p) {
  auto f = [&](const Vec2& x) { return (x - p[0]).norm() + (x - p[1]).norm() + (x - p[2]).norm(); };
  Vec2 lo = p[0].cwiseMin(p[1]).cwiseMin(p[2]), hi = p[0].cwiseMax(p[1]).cwiseMax(p[2]);
  Vec2 best = lo;
  const int n = 400;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const Vec2 x = lo + Vec2((hi - lo)[0] * i / n, (hi - lo)[1] * j / n);
      if (f(x) < f(best)) best = x;
    }
  // Refine on the Euclidean gradient norm, which resolves the minimizer to
  // rounding level where the flat distance sum cannot.
  auto grad = [&](const Vec2& x) {
    return ((x - p[0]).normalized() + (x - p[1]).normalized() + (x - p[2]).normalized()).norm();
  };
  double step = (hi - lo).maxCoeff() / n;
  while (step > 1e-16) {
    bool moved = false;
    for (const Vec2& d : {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1), Vec2(1, 1), Vec2(-1, -1), Vec2(1, -1),
                          Vec2(-1, 1)}) {
      if (grad(best + step * d) < grad(best)) {
        best += step * d;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

GammaNet tripod(ManifoldPtr m, const std::array<Vec2, 3>& p, const Vec2& center) {
  WeightedMultigraph g;
  for (int v = 0; v < 4; ++v) g.add_vertex(v);
  for (int i = 0; i < 3; ++i) g.add_edge(3, i, 1);
  std::map<int, ChartPoint> pos;
  for (int i = 0; i < 3; ++i) pos[i] = {0, p[i]};
  pos[3] = {0, center};
  return GammaNet(m, g, pos, {}, {0, 1, 2});
}

VecX fd_length_gradient(const GammaNet& net, double h) {
  const VecX x = net.coordinates();
  VecX g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    VecX xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (net_length(net.with_coordinates(xp, false)) - net_length(net.with_coordinates(xm, false))) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(NetLength, TorusLoopWithMultiplicity) {
  auto t = make_flat_torus();
  EXPECT_NEAR(net_length(torus_loop(t, 1, 0, Vec2(0.3, 1.0))), 2 * kPi, 1e-12);
  EXPECT_NEAR(net_length(torus_loop(t, 1, 0, Vec2(0.3, 1.0), 4, 3)), 6 * kPi, 1e-12);
}

TEST(NetLength, ThetaNetOnSphere) {
  auto s = make_round_sphere();
  const auto net = theta_net(s);
  EXPECT_NEAR(net_length(net), 3 * kPi, 1e-6);
  // Every segment is shorter than the injectivity bound.
  for (const auto& seg : net.segments()) EXPECT_LT(seg.length, s->inj_radius_lb());
}

TEST(BalancingDefect, ThetaNetPolesBalance) {
  const auto net = theta_net(make_round_sphere());
  for (const auto& d : balancing_defect(net)) EXPECT_LT(d.norm, 1e-8);
  EXPECT_LT(max_defect(net), 1e-8);
}

TEST(BalancingDefect, SingleFreeEndpoint) {
  auto t = make_flat_torus();
  WeightedMultigraph g;
  g.add_vertex(0);
  g.add_vertex(1);
  g.add_edge(0, 1, 3);
  const GammaNet net(t, g, {{0, {0, Vec2(1, 1)}}, {1, {0, Vec2(2, 1.5)}}}, {}, {1});
  const auto d = balancing_defect(net);
  EXPECT_NEAR(d[0].norm, 3.0, 1e-12);
  EXPECT_TRUE(d[1].pinned);
  const Vec2 u = (Vec2(2, 1.5) - Vec2(1, 1)).normalized();
  EXPECT_NEAR((length_gradient(net) - (-3.0 * u)).norm(), 0.0, 1e-12);
}

TEST(BalancingDefect, TripodAtFermatPoint) {
  auto t = make_flat_torus();
  const std::array<Vec2, 3> p{Vec2(1.0, 1.0), Vec2(2.6, 1.3), Vec2(1.7, 2.5)};
  const auto net = tripod(t, p, fermat_point(p));
  EXPECT_LT(max_defect(net), 1e-8);
}

TEST(LengthGradient, MatchesFiniteDifferencesOnEllipsoid) {
  auto e = make_ellipsoid(1.0, 1.2, 1.5);
  const Mat3 rot = Eigen::AngleAxisd(0.4, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  auto net = theta_net(e, rot, 2, {0.0, 1.9, 4.0});
  std::mt19937 rng(11);
  std::normal_distribution<double> nd(0.0, 0.03);
  VecX x = net.coordinates();
  for (int i = 0; i < x.size(); ++i) x[i] += nd(rng);
  net = net.with_coordinates(x);
  const VecX g = length_gradient(net);
  const VecX fd = fd_length_gradient(net, 1e-6);
  EXPECT_LT((g - fd).norm() / g.norm(), 1e-4);
  // First-variation identity per free point.
  const auto defects = balancing_defect(net);
  for (std::size_t k = 0; k < net.free_points().size(); ++k) {
    const auto& p = net.points()[net.free_points()[k]];
    const Vec2 lowered = e->metric(p.chart, p.x) * defects[net.free_points()[k]].b;
    EXPECT_LT((g.segment<2>(2 * k) + lowered).norm(), 1e-12);
  }
}

TEST(NetInvariants, ScalingEquivariance) {
  auto s = make_round_sphere();
  auto net = theta_net(s);
  const double c = 1.7;
  const auto big = net.with_manifold(scaled(s, c * c));
  EXPECT_NEAR(net_length(big), c * net_length(net), 1e-9);
  const auto d0 = balancing_defect(net), d1 = balancing_defect(big);
  for (std::size_t i = 0; i < d0.size(); ++i) EXPECT_LT((d0[i].b * 1.0 - d1[i].b * c).norm(), 1e-9);
  EXPECT_EQ(hessian_and_classify(net).classification, hessian_and_classify(big).classification);
}

TEST(NetInvariants, SubdivisionIsAdditive) {
  auto e = make_ellipsoid(1.0, 1.2, 1.5);
  auto net = theta_net(e, Mat3::Identity(), 2, {0.3, 2.2, 4.4});
  auto br = net.all_breaks();
  const int e0 = net.graph().edges().begin()->first;
  const auto& seg = net.segments()[net.edge_segments(e0)[0]];
  br[e0].insert(br[e0].begin(), segment_point(*e, seg, 0.37));
  const GammaNet finer(e, net.graph(), net.positions(), br);
  EXPECT_NEAR(net_length(finer), net_length(net), 1e-9);
  const auto d0 = balancing_defect(net), d1 = balancing_defect(finer);
  for (int v : net.graph().vertices())
    EXPECT_LT((d0[net.vertex_point(v)].b - d1[finer.vertex_point(v)].b).norm(), 1e-9);
  // The new break point is balanced.
  const int added = finer.edge_points(e0)[1];
  EXPECT_LT(d1[added].norm, 1e-9);
}

TEST(Classify, FlatTorusClosedGeodesicIsNondegenerate) {
  const auto net = torus_loop(make_flat_torus(), 1, 0, Vec2(0.5, 2.0), 5);
  const auto r = hessian_and_classify(net);
  EXPECT_EQ(r.classification, Classification::Nondegenerate);
  EXPECT_EQ(r.null_space.cols(), 1);  // normal translation
  EXPECT_LT(r.parallel_residuals.at(0), 1e-4);
  EXPECT_EQ((r.hessian - r.hessian.transpose()).norm(), 0.0);
}

TEST(Classify, SphereEquatorIsDegenerate) {
  const auto net = great_circle_net(make_round_sphere(), Vec3(0, 0, 1), Vec3(1, 0, 0), 6);
  const auto r = hessian_and_classify(net);
  EXPECT_EQ(r.classification, Classification::Degenerate);
  EXPECT_EQ(r.null_space.cols(), 2);  // rotations about two horizontal axes
  for (double res : r.parallel_residuals) EXPECT_GT(res, 1e-2);
}

TEST(Classify, ThetaNetOnSphereIsDegenerate) {
  const auto r = hessian_and_classify(theta_net(make_round_sphere()));
  EXPECT_EQ(r.classification, Classification::Degenerate);
  EXPECT_GE(r.null_space.cols(), 3);
}

TEST(Classify, EllipsoidEquatorIsNondegenerate) {
  auto e = make_ellipsoid(1.0, 1.2, 1.5);
  const auto net = great_circle_net(e, Vec3(0, 0, 1), Vec3(1, 0, 0), 8);
  ClassifyOptions a, b;
  b.hessian_step = 0.5e-5;
  const auto ra = hessian_and_classify(net, a);
  const auto rb = hessian_and_classify(net, b);
  EXPECT_EQ(ra.classification, Classification::Nondegenerate);
  EXPECT_EQ(ra.null_space.cols(), 0);
  const double la = ra.eigenvalues.cwiseAbs().minCoeff(), lb = rb.eigenvalues.cwiseAbs().minCoeff();
  EXPECT_LT(std::abs(la - lb) / lb, 1e-3);
}

TEST(Classify, RejectsNonStationaryNet) {
  auto s = make_round_sphere();
  auto net = theta_net(s);
  VecX x = net.coordinates();
  x[0] += 0.05;
  try {
    hessian_and_classify(net.with_coordinates(x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotStationary);
  }
}
