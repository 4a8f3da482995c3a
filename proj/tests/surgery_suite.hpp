#pragma once

// Constructed surgery inputs shared by the unit tests and the acceptance
// binary.

#include "geonet/shapes.hpp"

#include <string>
#include <vector>

namespace suite {

using namespace geonet;

inline Vec3 equator_dir(double t) { return {std::cos(t), std::sin(t), 0.0}; }

// The equator as a cycle graph with vertices at the given angles (increasing,
// within one turn of the first) and break points every <= 0.5 rad.
inline GammaNet equator_cycle(ManifoldPtr m, std::vector<double> angles, int n = 1) {
  WeightedMultigraph g;
  std::map<int, ChartPoint> pos;
  std::map<int, std::vector<ChartPoint>> br;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    g.add_vertex(static_cast<int>(i));
    pos[static_cast<int>(i)] = ray_point(*m, equator_dir(angles[i]));
  }
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double a = angles[i];
    const double b = i + 1 < angles.size() ? angles[i + 1] : angles[0] + 2 * kPi;
    const int e = g.add_edge(static_cast<int>(i), static_cast<int>((i + 1) % angles.size()), n);
    const int k = static_cast<int>(std::ceil((b - a) / 0.5));
    for (int j = 1; j < k; ++j) br[e].push_back(ray_point(*m, equator_dir(a + (b - a) * j / k)));
  }
  return GammaNet(std::move(m), std::move(g), pos, br);
}

inline GammaNet meridian(ManifoldPtr m, double phi) {
  WeightedMultigraph g;
  g.add_vertex(0);
  g.add_vertex(1);
  const int e = g.add_edge(0, 1, 1);
  std::vector<ChartPoint> br;
  for (int j = 1; j <= 3; ++j) {
    const double th = kPi * j / 4;
    br.push_back(ray_point(*m, Vec3(std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th))));
  }
  return GammaNet(m, std::move(g), {{0, ray_point(*m, {0, 0, 1})}, {1, ray_point(*m, {0, 0, -1})}}, {{e, br}});
}

inline Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

struct Case {
  std::string name;
  GammaNet net;
  int vertices = -1, edges = -1;
  double length = -1;
};

inline std::vector<Case> cases() {
  auto s = make_round_sphere();
  auto t = make_flat_torus();
  auto e = make_ellipsoid(1.0, 1.3, 0.8);
  std::vector<Case> out;
  out.push_back({"two great circles",
                 disjoint_union({great_circle_net(s, {0, 0, 1}, {1, 0, 0}), great_circle_net(s, {1, 0, 0}, {0, 1, 1})}), 2, 4,
                 4 * kPi});
  out.push_back({"circle vertex on another circle",
                 disjoint_union({great_circle_net(s, {0, 0, 1}, {1, 0, 0}), great_circle_net(s, {1, 0, 0}, {0, 1, 0})}), 2, 4,
                 4 * kPi});
  out.push_back({"three coordinate circles",
                 disjoint_union({great_circle_net(s, {0, 0, 1}, {1, 1, 0}), great_circle_net(s, {1, 0, 0}, {0, 1, 1}),
                                 great_circle_net(s, {0, 1, 0}, {1, 0, 1})}),
                 6, 12, 6 * kPi});
  std::vector<GammaNet> parts;
  for (double a : {0.2, 0.2 + kPi / 3, 0.2 + 2 * kPi / 3})
    parts.push_back(great_circle_net(s, {-std::sin(a), std::cos(a), 0}, {std::cos(a), std::sin(a), 0.3}));
  out.push_back({"concurrent circles", disjoint_union(parts), 2, 6, 6 * kPi});
  out.push_back({"theta and equator", disjoint_union({theta_net(s), great_circle_net(s, {0, 0, 1}, {1, 1, 0})}), 5, 9, 5 * kPi});
  out.push_back({"staggered overlap",
                 disjoint_union({great_circle_net(s, {0, 0, 1}, {1, 0, 0}, 6, 1), great_circle_net(s, {0, 0, 1}, equator_dir(0.5), 6, 2)}),
                 1, 1, 6 * kPi});
  out.push_back({"two-component overlap",
                 disjoint_union({equator_cycle(s, {0.0, 1.6 * kPi}), equator_cycle(s, {0.8 * kPi, 2.4 * kPi})}), 1, 1, 4 * kPi});
  out.push_back({"contained overlap", disjoint_union({equator_cycle(s, {0.0}), equator_cycle(s, {1.0, 1.5})}), 1, 1, 4 * kPi});
  out.push_back({"colinear degree-2 vertices", equator_cycle(s, {0.0, 1.0, 2.5, 3.0, 5.0}), 1, 1, 2 * kPi});
  out.push_back({"coincident theta nets", disjoint_union({theta_net(s), theta_net(s, Mat3::Identity(), 3)}), 2, 3, 6 * kPi});
  out.push_back({"theta with circle through a meridian",
                 disjoint_union({theta_net(s, rot_z(0.3)),
                                 great_circle_net(s, {-std::sin(0.3), std::cos(0.3), 0}, {std::cos(0.3), std::sin(0.3), 0.2})}),
                 2, 4, 5 * kPi});
  out.push_back({"torus coordinate loops",
                 disjoint_union({torus_loop(t, 1, 0, {0.3, 1.0}), torus_loop(t, 0, 1, {2.0, 0.4})}), 1, 2, 4 * kPi});
  const auto ell = disjoint_union({great_circle_net(e, {0, 0, 1}, {1, 1, 0}, 12), great_circle_net(e, {0, 1, 0}, {1, 0, 1}, 12)});
  out.push_back({"ellipsoid principal sections", ell, 2, 4, net_length(ell)});
  return out;
}

}  // namespace suite
