#pragma once

// Standard nets: cycle nets with break points, theta nets and great circles
// on surfaces embedded in R^3, closed coordinate geodesics on the torus.

#include "geonet/net.hpp"

#include <array>

namespace geonet {

/// Point of an embedded surface on the ray from the origin through d.
inline ChartPoint ray_point(const Manifold& m, const Vec3& d) {
  auto p = m.from_ambient(d);
  if (!p) fail(ErrorKind::InvalidInput, "net::ray_point", "manifold has no point on the requested ray");
  return m.canonical(*p);
}

/// A loop at pts[0] through the break points pts[1..], multiplicity n.
inline GammaNet cycle_net(ManifoldPtr m, const std::vector<ChartPoint>& pts, int n = 1) {
  if (pts.size() < 3) fail(ErrorKind::InvalidInput, "net::cycle_net", "need at least 3 points");
  WeightedMultigraph g;
  g.add_vertex(0);
  const int e = g.add_edge(0, 0, n);
  return GammaNet(std::move(m), std::move(g), {{0, pts[0]}}, {{e, {pts.begin() + 1, pts.end()}}});
}

/// Great circle {x : x·normal = 0} through k equally spaced ray points,
/// starting at the direction `start` (projected into the plane).
inline GammaNet great_circle_net(ManifoldPtr m, Vec3 normal, Vec3 start, int k = 6, int n = 1) {
  normal.normalize();
  Vec3 a = start - start.dot(normal) * normal;
  if (a.norm() < 1e-12) fail(ErrorKind::InvalidInput, "net::great_circle_net", "start direction parallel to the normal");
  a.normalize();
  const Vec3 b = normal.cross(a);
  std::vector<ChartPoint> pts;
  for (int i = 0; i < k; ++i) {
    const double t = 2 * kPi * i / k;
    pts.push_back(ray_point(*m, std::cos(t) * a + std::sin(t) * b));
  }
  return cycle_net(std::move(m), pts, n);
}

/// Two vertices at the poles R·(0,0,±1) joined by three meridians at the
/// given longitudes, each carrying `breaks` interior break points.
inline GammaNet theta_net(ManifoldPtr m, const Mat3& rot = Mat3::Identity(), int breaks = 2,
                          std::array<double, 3> longitudes = {0.0, 2 * kPi / 3, 4 * kPi / 3}) {
  WeightedMultigraph g;
  g.add_vertex(0);
  g.add_vertex(1);
  std::map<int, ChartPoint> pos{{0, ray_point(*m, rot * Vec3(0, 0, 1))}, {1, ray_point(*m, rot * Vec3(0, 0, -1))}};
  std::map<int, std::vector<ChartPoint>> br;
  for (double phi : longitudes) {
    const int e = g.add_edge(0, 1, 1);
    for (int j = 1; j <= breaks; ++j) {
      const double th = kPi * j / (breaks + 1);
      br[e].push_back(ray_point(*m, rot * Vec3(std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th))));
    }
  }
  return GammaNet(std::move(m), std::move(g), pos, br);
}

/// Closed geodesic of the flat torus in direction (p, q) through x0, with k
/// points along it.
inline GammaNet torus_loop(ManifoldPtr m, int p, int q, Vec2 x0 = Vec2::Zero(), int k = 4, int n = 1) {
  const ChartInfo& c = m->charts()[0];
  const Vec2 dir(p * c.period()[0], q * c.period()[1]);
  std::vector<ChartPoint> pts;
  for (int i = 0; i < k; ++i) pts.push_back(m->canonical({0, x0 + dir * (double(i) / k)}));
  return cycle_net(std::move(m), pts, n);
}

/// Union of nets on one manifold; vertex and edge ids are renumbered
/// consecutively in input order.
inline GammaNet disjoint_union(const std::vector<GammaNet>& nets) {
  if (nets.empty()) fail(ErrorKind::InvalidInput, "net::disjoint_union", "no nets");
  WeightedMultigraph g;
  std::map<int, ChartPoint> pos;
  std::map<int, std::vector<ChartPoint>> br;
  std::set<int> pinned;
  for (const auto& n : nets) {
    std::map<int, int> vmap;
    for (int v : n.graph().vertices()) {
      vmap[v] = g.add_vertex();
      pos[vmap[v]] = n.position(v);
      if (n.pinned().count(v)) pinned.insert(vmap[v]);
    }
    for (const auto& [id, e] : n.graph().edges()) {
      const int ne = g.add_edge(vmap[e.a], vmap[e.b], e.mult);
      if (!n.breaks(id).empty()) br[ne] = n.breaks(id);
    }
  }
  return GammaNet(nets.front().manifold_ptr(), std::move(g), pos, br, pinned);
}

}  // namespace geonet
