#pragma once

// Regularization of stationary nets into embedded nets over good graphs
// with the same image, multiplicity and length:
//   1. subdivide edges of length >= inj into equal parts,
//   2. merge tangential overlaps (multiplicities add on the common arc),
//   3. split transverse crossings and vertices lying on edge interiors,
//   4. identify coincident vertices,
//   5. erase degree-2 vertices with opposite tangents and equal multiplicity.
//
// Coincidences are found on the sample polylines and refined on the exact
// geodesics. A refined distance in (tol_geo/10, tol_geo) cannot be decided
// and raises AmbiguousGeometry.

#include "geonet/solver.hpp"

#include <limits>
#include <string>
#include <vector>

namespace geonet {

struct CoincidenceEvent {
  enum class Kind { VertexPair, VertexOnEdge, Overlap, Crossing };
  Kind kind = Kind::Crossing;
  int v1 = -1, v2 = -1;  // VertexPair: both; VertexOnEdge: v1; Overlap at a shared vertex: v1
  int e1 = -1, e2 = -1;  // VertexOnEdge: e1 is the edge carrying v1
  int tangent_edge = -1; // VertexOnEdge: an edge at v1 running along e1, if any
  int seg1 = -1, seg2 = -1;
  double t1 = 0.0, t2 = 0.0;  // segment parameters in [0, 1]
  ChartPoint point;
  double distance = 0.0;
  double angle = 0.0;  // between tangent lines, radians
};

inline const char* to_string(CoincidenceEvent::Kind k) {
  switch (k) {
    case CoincidenceEvent::Kind::VertexPair: return "vertex_coincidence";
    case CoincidenceEvent::Kind::VertexOnEdge: return "vertex_on_edge";
    case CoincidenceEvent::Kind::Overlap: return "tangential_overlap";
    case CoincidenceEvent::Kind::Crossing: return "transverse_crossing";
  }
  return "?";
}

namespace detail {

struct CurveEval {
  ChartPoint p;
  Vec3 da;  // ambient derivative per unit segment parameter
};

/// Exact point of a segment at parameter s, with a fixed step count so the
/// result is smooth in s.
inline CurveEval eval_segment(const Manifold& m, const GeodesicSegment& seg, double s) {
  s = std::clamp(s, 0.0, 1.0);
  Carry c{seg.start, seg.v0, {}};
  if (s > 0) integrate(m, c, s * seg.duration, seg.steps, nullptr, nullptr, "surgery::detect_coincidences");
  return {c.p, m.ambient_jacobian(c.p.chart, c.p.x) * (c.v * seg.duration)};
}

inline double line_angle(const Vec3& a, const Vec3& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

/// Squared distance between 3D segments [p0,p1] and [q0,q1].
inline double segment_distance2(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1, double& s, double& t) {
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  if (a <= 1e-300 && e <= 1e-300) {
    s = t = 0;
    return r.squaredNorm();
  }
  if (a <= 1e-300) {
    s = 0;
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-300) {
      t = 0;
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2), den = a * e - b * b;
      s = den > 1e-300 ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return (p0 + s * d1 - q0 - t * d2).squaredNorm();
}

/// Sample polyline of a segment relative to its middle sample.
struct LocalCurve {
  ChartPoint mid;
  std::vector<Vec3> rel;
  double radius = 0.0;
};

inline LocalCurve local_curve(const Manifold& m, const GeodesicSegment& seg) {
  LocalCurve c;
  c.mid = seg.samples[seg.samples.size() / 2];
  for (const auto& p : seg.samples) {
    c.rel.push_back(m.ambient_delta(c.mid, p));
    c.radius = std::max(c.radius, c.rel.back().norm());
  }
  return c;
}

/// Closest point of a segment to a point: coarse polyline scan, then
/// Gauss–Newton on the exact geodesic.
inline std::pair<double, double> project_point(const Manifold& m, const GeodesicSegment& seg, const LocalCurve& lc,
                                               const ChartPoint& x) {
  const Vec3 px = m.ambient_delta(lc.mid, x);
  double best = std::numeric_limits<double>::infinity(), s0 = 0.0;
  const double n = static_cast<double>(lc.rel.size() - 1);
  for (std::size_t i = 0; i + 1 < lc.rel.size(); ++i) {
    double s, t;
    const double d = segment_distance2(lc.rel[i], lc.rel[i + 1], px, px, s, t);
    if (d < best) {
      best = d;
      s0 = (i + s) / n;
    }
  }
  double s = s0;
  for (int it = 0; it < 30; ++it) {
    const CurveEval c = eval_segment(m, seg, s);
    const Vec3 r = m.ambient_delta(x, c.p);
    const double g = c.da.dot(r), h = c.da.squaredNorm();
    if (!(h > 0)) break;
    const double sn = std::clamp(s - g / h, 0.0, 1.0);
    if (std::abs(sn - s) < 1e-15) {
      s = sn;
      break;
    }
    s = sn;
  }
  return {s, m.ambient_delta(x, eval_segment(m, seg, s).p).norm()};
}

/// Closest pair of points of two segments near (s, t): Levenberg–Marquardt
/// on the ambient separation.
inline void refine_pair(const Manifold& m, const GeodesicSegment& a, const GeodesicSegment& b, double& s, double& t,
                        double& dist) {
  double mu = 1e-12;
  CurveEval ca = eval_segment(m, a, s), cb = eval_segment(m, b, t);
  Vec3 r = m.ambient_delta(ca.p, cb.p);
  for (int it = 0; it < 60; ++it) {
    Eigen::Matrix<double, 3, 2> j;
    j.col(0) = -ca.da;
    j.col(1) = cb.da;
    const Mat2 jtj = j.transpose() * j;
    const Vec2 g = j.transpose() * r;
    bool improved = false;
    for (int k = 0; k < 20 && !improved; ++k) {
      const Vec2 step = -(jtj + mu * (jtj.diagonal().maxCoeff() + 1e-300) * Mat2::Identity()).ldlt().solve(g);
      const double sn = std::clamp(s + step[0], 0.0, 1.0), tn = std::clamp(t + step[1], 0.0, 1.0);
      const CurveEval na = eval_segment(m, a, sn), nb = eval_segment(m, b, tn);
      const Vec3 rn = m.ambient_delta(na.p, nb.p);
      if (rn.norm() < r.norm()) {
        const bool tiny = std::abs(sn - s) + std::abs(tn - t) < 1e-15;
        s = sn;
        t = tn;
        ca = na;
        cb = nb;
        r = rn;
        mu = std::max(mu * 0.1, 1e-15);
        improved = true;
        if (tiny) it = 60;
      } else {
        mu *= 10;
      }
    }
    if (!improved || r.norm() < 1e-15) break;
  }
  dist = r.norm();
}

}  // namespace detail

/// All coincidences of the net's image at tolerance tol_geo.
inline std::vector<CoincidenceEvent> detect_coincidences(const GammaNet& net, double tol_geo = Tolerances{}.geo) {
  const char* origin = "surgery::detect_coincidences";
  using Kind = CoincidenceEvent::Kind;
  const Manifold& m = net.manifold();
  const double decide = tol_geo / 10.0;
  const double tangent_angle = 10.0 * tol_geo;
  const double shared_zone = 1e-2;
  std::vector<CoincidenceEvent> out;
  auto ambiguous = [&](const std::string& what, double d) {
    fail(ErrorKind::AmbiguousGeometry, origin,
         what + " at distance " + std::to_string(d) + " inside the refusal band (" + std::to_string(decide) + ", " +
             std::to_string(tol_geo) + ")");
  };
  const auto& refs = net.segment_refs();
  const auto& segs = net.segments();
  for (const auto& s : segs)
    if (s.samples.size() < 3) fail(ErrorKind::InvalidInput, origin, "segments must carry samples");
  std::vector<detail::LocalCurve> curves;
  for (const auto& s : segs) curves.push_back(detail::local_curve(m, s));
  auto is_vertex_point = [&](int p) { return net.labels()[p].is_vertex(); };
  const auto& g = net.graph();

  // Vertex pairs.
  std::vector<int> verts(g.vertices().begin(), g.vertices().end());
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j) {
      const double d = m.ambient_delta(net.position(verts[i]), net.position(verts[j])).norm();
      if (d >= tol_geo) continue;
      if (d > decide) ambiguous("vertices " + std::to_string(verts[i]) + ", " + std::to_string(verts[j]), d);
      CoincidenceEvent e;
      e.kind = Kind::VertexPair;
      e.v1 = verts[i];
      e.v2 = verts[j];
      e.point = net.position(verts[i]);
      e.distance = d;
      out.push_back(e);
    }

  // Inward unit tangents (ambient) of the segment ends at each vertex.
  auto end_tangent = [&](int s, int point) -> Vec3 {
    const bool start = refs[s].p == point;
    const auto& seg = segs[s];
    if (start) return m.ambient_jacobian(seg.start.chart, seg.start.x) * seg.v0;
    return -(m.ambient_jacobian(seg.end.chart, seg.end.x) * seg.v_end);
  };

  // Tangential departures from a shared vertex.
  for (int v : verts) {
    const int p = net.vertex_point(v);
    const auto& inc = net.incident()[p];
    for (std::size_t i = 0; i < inc.size(); ++i)
      for (std::size_t j = i + 1; j < inc.size(); ++j) {
        const int a = inc[i], b = inc[j];
        const Vec3 ua = end_tangent(a, p).normalized(), ub = end_tangent(b, p).normalized();
        const double ang = std::acos(std::clamp(ua.dot(ub), -1.0, 1.0));
        if (ang > tangent_angle) continue;
        CoincidenceEvent e;
        e.kind = Kind::Overlap;
        e.v1 = v;
        e.e1 = std::min(refs[a].edge, refs[b].edge);
        e.e2 = std::max(refs[a].edge, refs[b].edge);
        e.seg1 = refs[a].edge <= refs[b].edge ? a : b;
        e.seg2 = refs[a].edge <= refs[b].edge ? b : a;
        e.t1 = refs[e.seg1].p == p ? 0.0 : 1.0;
        e.t2 = refs[e.seg2].p == p ? 0.0 : 1.0;
        e.point = net.position(v);
        e.angle = ang;
        out.push_back(e);
      }
  }

  // Vertices on segment interiors.
  for (int v : verts) {
    const int p = net.vertex_point(v);
    const ChartPoint& x = net.points()[p];
    for (std::size_t s = 0; s < segs.size(); ++s) {
      if (refs[s].p == p || refs[s].q == p) continue;
      if (m.ambient_delta(curves[s].mid, x).norm() > curves[s].radius + tol_geo) continue;
      const auto [t, d] = detail::project_point(m, segs[s], curves[s], x);
      if (d >= tol_geo) continue;
      // Near a vertex end it is a vertex pair, handled above.
      const ChartPoint at = detail::eval_segment(m, segs[s], t).p;
      bool at_vertex = false;
      for (int pt : {refs[s].p, refs[s].q})
        at_vertex = at_vertex || (is_vertex_point(pt) && m.ambient_delta(net.points()[pt], at).norm() < tol_geo);
      if (at_vertex) continue;
      if (d > decide) ambiguous("vertex " + std::to_string(v) + " and edge " + std::to_string(refs[s].edge), d);
      bool dup = false;
      for (const auto& o : out)
        if (o.kind == Kind::VertexOnEdge && o.v1 == v && o.e1 == refs[s].edge) dup = true;
      if (dup) continue;
      CoincidenceEvent e;
      e.kind = Kind::VertexOnEdge;
      e.v1 = v;
      e.e1 = refs[s].edge;
      e.seg1 = static_cast<int>(s);
      e.t1 = t;
      e.point = x;
      e.distance = d;
      const Vec3 dir = detail::eval_segment(m, segs[s], t).da;
      for (int si : net.incident()[p]) {
        if (detail::line_angle(end_tangent(si, p), dir) <= tangent_angle) {
          e.tangent_edge = refs[si].edge;
          break;
        }
      }
      out.push_back(e);
    }
  }

  // Interior coincidences between segments.
  const double coarse = 5e-3;
  for (std::size_t a = 0; a < segs.size(); ++a) {
    for (std::size_t b = a + 1; b < segs.size(); ++b) {
      const auto& ra = refs[a];
      const auto& rb = refs[b];
      // Consecutive segments of one edge continue each other.
      std::vector<int> shared;
      for (int pa : {ra.p, ra.q})
        for (int pb : {rb.p, rb.q})
          if (pa == pb) shared.push_back(pa);
      if (ra.edge == rb.edge) {
        bool through_break = false;
        for (int sp : shared) through_break = through_break || !is_vertex_point(sp);
        if (through_break) continue;
      }
      const Vec3 off = m.ambient_delta(curves[a].mid, curves[b].mid);
      if (off.norm() > curves[a].radius + curves[b].radius + coarse) continue;
      std::vector<Vec3> shared_rel;
      for (int sp : shared)
        if (is_vertex_point(sp)) shared_rel.push_back(m.ambient_delta(curves[a].mid, net.points()[sp]));
      const auto& pa = curves[a].rel;
      const auto& pb = curves[b].rel;
      const double na = static_cast<double>(pa.size() - 1), nb = static_cast<double>(pb.size() - 1);
      struct Cand {
        int i, j;
        double d, s, t;
      };
      std::vector<Cand> cands;
      for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
        for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
          const Vec3 q0 = off + pb[j], q1 = off + pb[j + 1];
          double s, t;
          const double d2 = detail::segment_distance2(pa[i], pa[i + 1], q0, q1, s, t);
          if (d2 >= coarse * coarse) continue;
          const Vec3 at = pa[i] + s * (pa[i + 1] - pa[i]);
          bool near_shared = false;
          for (const Vec3& sr : shared_rel) near_shared = near_shared || (at - sr).norm() < shared_zone;
          if (near_shared) continue;
          cands.push_back({static_cast<int>(i), static_cast<int>(j), std::sqrt(d2), (i + s) / na, (j + t) / nb});
        }
      }
      // One refinement per cluster of neighbouring candidate pieces.
      std::vector<char> used(cands.size(), 0);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        if (used[c]) continue;
        std::vector<std::size_t> cluster{c};
        used[c] = 1;
        for (std::size_t k = 0; k < cluster.size(); ++k)
          for (std::size_t o = 0; o < cands.size(); ++o)
            if (!used[o] && std::abs(cands[o].i - cands[cluster[k]].i) <= 2 &&
                std::abs(cands[o].j - cands[cluster[k]].j) <= 2) {
              used[o] = 1;
              cluster.push_back(o);
            }
        std::size_t best = cluster[0];
        for (std::size_t k : cluster)
          if (cands[k].d < cands[best].d) best = k;
        double s = cands[best].s, t = cands[best].t, d = 0.0;
        detail::refine_pair(m, segs[a], segs[b], s, t, d);
        if (d >= tol_geo) continue;
        const auto ea = detail::eval_segment(m, segs[a], s);
        const auto eb = detail::eval_segment(m, segs[b], t);
        const double angle = detail::line_angle(ea.da, eb.da);
        // Transverse contacts at a vertex are vertex events.
        bool at_vertex = false;
        for (int pt : {ra.p, ra.q, rb.p, rb.q})
          at_vertex = at_vertex || (is_vertex_point(pt) && m.ambient_delta(net.points()[pt], ea.p).norm() < tol_geo);
        if (at_vertex && angle > tangent_angle) continue;
        bool near_shared = false;
        for (const Vec3& sr : shared_rel)
          near_shared = near_shared || (m.ambient_delta(curves[a].mid, ea.p) - sr).norm() < shared_zone;
        if (near_shared) continue;
        if (d > decide) ambiguous("edges " + std::to_string(ra.edge) + ", " + std::to_string(rb.edge), d);
        CoincidenceEvent e;
        e.angle = angle;
        e.kind = e.angle > tangent_angle ? Kind::Crossing : Kind::Overlap;
        const bool swap = ra.edge > rb.edge;
        e.e1 = swap ? rb.edge : ra.edge;
        e.e2 = swap ? ra.edge : rb.edge;
        e.seg1 = static_cast<int>(swap ? b : a);
        e.seg2 = static_cast<int>(swap ? a : b);
        e.t1 = swap ? t : s;
        e.t2 = swap ? s : t;
        e.point = m.canonical(ea.p);
        e.distance = d;
        bool dup = false;
        for (const auto& o : out)
          if (o.kind == e.kind && o.e1 == e.e1 && o.e2 == e.e2 &&
              (e.kind == Kind::Overlap || m.ambient_delta(o.point, e.point).norm() < tol_geo))
            dup = true;
        if (!dup) out.push_back(e);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const CoincidenceEvent& x, const CoincidenceEvent& y) {
    return std::tie(x.kind, x.e1, x.e2, x.v1, x.v2) < std::tie(y.kind, y.e1, y.e2, y.v1, y.v2);
  });
  return out;
}

struct SurgeryStep {
  int pass = 0;  // 1-4 as in the lemma, 5 for the good-ification
  std::string op;
  std::vector<int> edges, vertices;  // arguments
  std::vector<int> order;            // replace_overlap vertex order
  std::vector<int> new_edges, new_vertices;
  std::vector<int> multiplicities;  // of the new edges
  std::vector<double> counter;      // pass termination counter before the step (lexicographic)
  std::map<int, ChartPoint> positions;  // positions assigned to new vertices
};

struct SurgeryLog {
  std::vector<SurgeryStep> steps;
  std::vector<std::string> notes;
};

struct RegularizeResult {
  GammaNet net;
  SurgeryLog log;
};

namespace detail {

/// Working state: graph, vertex positions, edge break points.
struct SurgeryState {
  ManifoldPtr m;
  WeightedMultigraph g;
  std::map<int, ChartPoint> pos;
  std::map<int, std::vector<ChartPoint>> breaks;
  std::set<int> pinned;

  GammaNet build() const {
    std::map<int, std::vector<ChartPoint>> br;
    for (const auto& [e, b] : breaks)
      if (g.has_edge(e) && !b.empty()) br[e] = b;
    std::set<int> pin;
    for (int v : pinned)
      if (g.has_vertex(v)) pin.insert(v);
    return GammaNet(m, g, pos, br, pin);
  }

  /// Break points of an edge read from vertex `from` to the other end.
  std::vector<ChartPoint> chain_from(int e, int from) const {
    std::vector<ChartPoint> c;
    if (auto it = breaks.find(e); it != breaks.end()) c = it->second;
    if (g.edge(e).a != from) std::reverse(c.begin(), c.end());
    return c;
  }

  void apply(const Rewrite& r, SurgeryStep& step, std::map<int, ChartPoint> new_pos = {}) {
    for (int e : step.edges) breaks.erase(e);
    for (int e : r.new_edges) breaks.erase(e);
    g = r.graph;
    step.new_edges = r.new_edges;
    step.new_vertices = r.new_vertices;
    for (int e : r.new_edges) step.multiplicities.push_back(g.edge(e).mult);
    for (auto& [v, p] : new_pos) pos[v] = p;
    for (auto it = pos.begin(); it != pos.end();) it = g.has_vertex(it->first) ? std::next(it) : pos.erase(it);
    step.positions = std::move(new_pos);
  }
};

inline double tangent_gap(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

}  // namespace detail

/// Step 1: every edge of length >= inj is cut into floor(L/inj)+1 equal
/// parts; afterwards every edge is a single geodesic segment.
inline void surgery_subdivide(detail::SurgeryState& st, SurgeryLog& log) {
  const GammaNet net = st.build();
  const double inj = st.m->inj_radius_lb();
  int remaining = 0;
  for (const auto& [id, e] : net.graph().edges())
    if (net.edge_length(id) >= inj) ++remaining;
  std::vector<int> ids;
  for (const auto& [id, e] : net.graph().edges()) ids.push_back(id);
  for (int id : ids) {
    const double len = net.edge_length(id);
    if (len < inj) {
      st.breaks.erase(id);
      continue;
    }
    const int l = static_cast<int>(std::floor(len / inj)) + 1;
    SurgeryStep step;
    step.pass = 1;
    step.op = "subdivide_edge";
    step.edges = {id};
    step.vertices = {l};
    step.counter = {static_cast<double>(remaining--)};
    const Rewrite r = subdivide_edge(st.g, id, l);
    std::map<int, ChartPoint> np;
    for (int k = 0; k < l - 1; ++k) np[r.new_vertices[k]] = detail::edge_point_at(net, id, len * (k + 1) / l);
    st.apply(r, step, np);
    st.breaks.erase(id);
    log.steps.push_back(std::move(step));
  }
}

namespace detail {

/// Arc positions of the endpoints of two overlapping single-segment edges
/// along their common geodesic, measured from e1's `a` end.
inline std::map<int, double> overlap_positions(const GammaNet& net, int e1, int e2, double tol) {
  const Manifold& m = net.manifold();
  const int s1 = net.edge_segments(e1).front(), s2 = net.edge_segments(e2).front();
  const auto& g1 = net.segments()[s1];
  const auto& g2 = net.segments()[s2];
  const LocalCurve c1 = local_curve(m, g1), c2 = local_curve(m, g2);
  const Edge& a = net.graph().edge(e1);
  const Edge& b = net.graph().edge(e2);
  const double l1 = g1.length, l2 = g2.length;
  const double on = tol / 10.0;
  // Parameters of e2's ends on e1 and of e1's ends on e2, where they lie on it.
  std::map<int, double> s_on1, t_on2;
  s_on1[a.a] = 0.0;
  s_on1[a.b] = 1.0;
  t_on2[b.a] = 0.0;
  t_on2[b.b] = 1.0;
  for (int v : {b.a, b.b}) {
    if (s_on1.count(v)) continue;
    auto [s, d] = project_point(m, g1, c1, net.position(v));
    if (d <= on) s_on1[v] = s;
  }
  for (int v : {a.a, a.b}) {
    if (t_on2.count(v)) continue;
    auto [t, d] = project_point(m, g2, c2, net.position(v));
    if (d <= on) t_on2[v] = t;
  }
  int ref = -1;
  for (const auto& [v, s] : s_on1)
    if (t_on2.count(v)) ref = v;
  if (ref < 0) fail(ErrorKind::AmbiguousGeometry, "surgery::regularize", "overlapping edges share no endpoint on both");
  const Vec3 d1 = eval_segment(m, g1, s_on1[ref]).da, d2 = eval_segment(m, g2, t_on2[ref]).da;
  const double sigma = d1.dot(d2) >= 0 ? 1.0 : -1.0;
  const double sigma0 = s_on1[ref] * l1 - sigma * t_on2[ref] * l2;
  std::map<int, double> pos;
  for (int v : {a.a, a.b, b.a, b.b}) pos[v] = s_on1.count(v) ? s_on1[v] * l1 : sigma0 + sigma * t_on2[v] * l2;
  return pos;
}

/// Overlapping edge pairs with their overlap length.
inline std::vector<std::tuple<int, int, double>> overlap_pairs(const GammaNet& net,
                                                               const std::vector<CoincidenceEvent>& ev, double tol) {
  std::set<std::pair<int, int>> pairs;
  for (const auto& e : ev) {
    if (e.kind == CoincidenceEvent::Kind::Overlap && e.e1 != e.e2) pairs.insert({e.e1, e.e2});
    if (e.kind == CoincidenceEvent::Kind::VertexOnEdge && e.tangent_edge >= 0 && e.tangent_edge != e.e1)
      pairs.insert({std::min(e.e1, e.tangent_edge), std::max(e.e1, e.tangent_edge)});
  }
  std::vector<std::tuple<int, int, double>> out;
  for (auto [x, y] : pairs) {
    const auto pos = overlap_positions(net, x, y, tol);
    const Edge& a = net.graph().edge(x);
    const Edge& b = net.graph().edge(y);
    const double lo = std::max(std::min(pos.at(a.a), pos.at(a.b)), std::min(pos.at(b.a), pos.at(b.b)));
    const double hi = std::min(std::max(pos.at(a.a), pos.at(a.b)), std::max(pos.at(b.a), pos.at(b.b)));
    out.push_back({x, y, std::max(0.0, hi - lo)});
  }
  return out;
}

}  // namespace detail

/// Step 2: tangential overlaps, pairwise in id order.
inline void surgery_overlaps(detail::SurgeryState& st, SurgeryLog& log, double tol) {
  for (int guard = 0; guard < 10000; ++guard) {
    const GammaNet net = st.build();
    const auto pairs = detail::overlap_pairs(net, detect_coincidences(net, tol), tol);
    if (pairs.empty()) return;
    double total = 0.0;
    for (const auto& p : pairs) total += std::get<2>(p);
    const auto [e1, e2, len] = pairs.front();
    const auto pos = detail::overlap_positions(net, e1, e2, tol);
    std::vector<std::pair<double, int>> sorted;
    for (const auto& [v, x] : pos) sorted.push_back({x, v});
    std::sort(sorted.begin(), sorted.end());
    // Endpoint coincidences between distinct vertices, counted for the
    // lexicographic counter; the first is identified.
    int coincide = 0;
    std::pair<int, int> first{-1, -1};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      if (sorted[i + 1].first - sorted[i].first <= tol) {
        ++coincide;
        if (first.first < 0)
          first = {std::min(sorted[i].second, sorted[i + 1].second), std::max(sorted[i].second, sorted[i + 1].second)};
      }
    }
    SurgeryStep step;
    step.pass = 2;
    step.counter = {total, static_cast<double>(coincide)};
    if (first.first >= 0) {
      step.op = "identify_vertices";
      step.vertices = {first.first, first.second};
      st.apply(identify_vertices(st.g, first.first, first.second), step);
    } else {
      step.op = "replace_overlap";
      step.edges = {e1, e2};
      for (const auto& [x, v] : sorted) step.order.push_back(v);
      st.apply(replace_overlap(st.g, e1, e2, step.order), step);
    }
    log.steps.push_back(std::move(step));
  }
  fail(ErrorKind::NoConvergence, "surgery::regularize", "overlap pass did not terminate");
}

namespace detail {

/// Distinct (edge, interior point) incidences of crossings.
inline int crossing_incidences(const GammaNet& net, const std::vector<CoincidenceEvent>& ev, double tol) {
  std::vector<std::pair<int, ChartPoint>> inc;
  auto add = [&](int e, const ChartPoint& p) {
    for (const auto& [f, q] : inc)
      if (f == e && net.manifold().ambient_delta(p, q).norm() < tol) return;
    inc.push_back({e, p});
  };
  for (const auto& e : ev) {
    if (e.kind == CoincidenceEvent::Kind::Crossing) {
      add(e.e1, e.point);
      add(e.e2, e.point);
    } else if (e.kind == CoincidenceEvent::Kind::VertexOnEdge && e.tangent_edge < 0) {
      add(e.e1, e.point);
    }
  }
  return static_cast<int>(inc.size());
}

}  // namespace detail

/// Step 3: transverse crossings become vertices; a vertex on an edge
/// interior splits that edge.
inline void surgery_crossings(detail::SurgeryState& st, SurgeryLog& log, double tol) {
  using Kind = CoincidenceEvent::Kind;
  for (int guard = 0; guard < 10000; ++guard) {
    const GammaNet net = st.build();
    const auto ev = detect_coincidences(net, tol);
    const CoincidenceEvent* pick = nullptr;
    for (const auto& e : ev) {
      if (e.kind == Kind::Crossing && e.e1 != e.e2) {
        pick = &e;
        break;
      }
    }
    if (!pick)
      for (const auto& e : ev)
        if (e.kind == Kind::VertexOnEdge && e.tangent_edge < 0) {
          pick = &e;
          break;
        }
    if (!pick) return;
    const double counter = detail::crossing_incidences(net, ev, tol);
    if (pick->kind == Kind::Crossing) {
      SurgeryStep step;
      step.pass = 3;
      step.op = "split_at_crossing";
      step.edges = {pick->e1, pick->e2};
      step.counter = {counter};
      const Rewrite r = split_at_crossing(st.g, pick->e1, pick->e2);
      st.apply(r, step, {{r.new_vertices[0], pick->point}});
      log.steps.push_back(std::move(step));
    } else {
      SurgeryStep sub;
      sub.pass = 3;
      sub.op = "subdivide_edge";
      sub.edges = {pick->e1};
      sub.vertices = {2};
      sub.counter = {counter};
      const Rewrite r = subdivide_edge(st.g, pick->e1, 2);
      const int w = r.new_vertices[0];
      st.apply(r, sub, {{w, st.pos.at(pick->v1)}});
      log.steps.push_back(std::move(sub));
      SurgeryStep id;
      id.pass = 3;
      id.op = "identify_vertices";
      id.vertices = {pick->v1, w};
      id.counter = {counter - 0.5};
      st.apply(identify_vertices(st.g, pick->v1, w), id);
      log.steps.push_back(std::move(id));
    }
  }
  fail(ErrorKind::NoConvergence, "surgery::regularize", "crossing pass did not terminate");
}

/// Step 4: coincident vertices are identified, the lower id surviving.
inline void surgery_identify(detail::SurgeryState& st, SurgeryLog& log, double tol) {
  for (int guard = 0; guard < 10000; ++guard) {
    const GammaNet net = st.build();
    std::vector<CoincidenceEvent> pairs;
    for (const auto& e : detect_coincidences(net, tol))
      if (e.kind == CoincidenceEvent::Kind::VertexPair) pairs.push_back(e);
    if (pairs.empty()) return;
    SurgeryStep step;
    step.pass = 4;
    step.op = "identify_vertices";
    step.vertices = {pairs[0].v1, pairs[0].v2};
    step.counter = {static_cast<double>(pairs.size())};
    st.apply(identify_vertices(st.g, pairs[0].v1, pairs[0].v2), step);
    log.steps.push_back(std::move(step));
  }
  fail(ErrorKind::NoConvergence, "surgery::regularize", "identification pass did not terminate");
}

namespace detail {

/// Degree-2 vertices with two distinct edges of equal multiplicity and
/// opposite inward tangents, highest id first.
inline std::vector<std::tuple<int, int, int>> erasable(const SurgeryState& st, const GammaNet& net, double tol) {
  const Manifold& m = *st.m;
  std::vector<std::tuple<int, int, int>> out;
  for (auto it = st.g.vertices().rbegin(); it != st.g.vertices().rend(); ++it) {
    const int v = *it;
    if (st.pinned.count(v)) continue;
    const auto ends = st.g.incidences(v);
    if (ends.size() != 2 || ends[0].edge == ends[1].edge) continue;
    const Edge& a = st.g.edge(ends[0].edge);
    const Edge& b = st.g.edge(ends[1].edge);
    if (a.mult != b.mult) continue;
    const int p = net.vertex_point(v);
    Vec3 u[2];
    for (int k = 0; k < 2; ++k) {
      const int s = ends[k].side == 0 ? net.edge_segments(ends[k].edge).front() : net.edge_segments(ends[k].edge).back();
      const auto& seg = net.segments()[s];
      u[k] = net.segment_refs()[s].p == p ? Vec3(m.ambient_jacobian(seg.start.chart, seg.start.x) * seg.v0)
                                          : Vec3(-(m.ambient_jacobian(seg.end.chart, seg.end.x) * seg.v_end));
    }
    if (tangent_gap(u[0], -u[1]) > 10.0 * tol) continue;
    // A cycle component keeps its lowest vertex.
    bool lowest_of_cycle = false;
    for (const auto& c : st.g.components()) {
      if (std::find(c.begin(), c.end(), v) == c.end()) continue;
      bool all2 = true;
      for (int w : c) all2 = all2 && st.g.degree(w) == 2;
      lowest_of_cycle = all2 && v == *std::min_element(c.begin(), c.end());
    }
    if (lowest_of_cycle) continue;
    out.push_back({v, ends[0].edge, ends[1].edge});
  }
  return out;
}

}  // namespace detail

/// Good-ification: erase colinear degree-2 vertices, merging their edges.
inline void surgery_goodify(detail::SurgeryState& st, SurgeryLog& log, double tol) {
  for (int guard = 0; guard < 100000; ++guard) {
    const GammaNet net = st.build();
    const auto cand = detail::erasable(st, net, tol);
    if (cand.empty()) return;
    const auto [v, e1, e2] = cand.front();
    const Edge a = st.g.edge(e1);
    // New edge runs from a's far end through v to b's far end.
    std::vector<ChartPoint> chain = st.chain_from(e1, a.other(v));
    chain.push_back(st.pos.at(v));
    const auto tail = st.chain_from(e2, v);
    chain.insert(chain.end(), tail.begin(), tail.end());
    SurgeryStep step;
    step.pass = 5;
    step.op = "erase_colinear_vertex";
    step.vertices = {v};
    step.edges = {e1, e2};
    step.counter = {static_cast<double>(cand.size())};
    const Rewrite r = erase_colinear_vertex(st.g, v, e1, e2);
    st.apply(r, step);
    const Edge& ne = st.g.edge(r.new_edges[0]);
    if (ne.a != a.other(v)) std::reverse(chain.begin(), chain.end());
    st.breaks[r.new_edges[0]] = chain;
    log.steps.push_back(std::move(step));
  }
}

/// Embedded net over good components with the same image, multiplicity and
/// length as the (stationary) input.
inline RegularizeResult regularize(const GammaNet& input, const Tolerances& tol = {}) {
  const char* origin = "surgery::regularize";
  if (max_defect(input) > tol.stat)
    fail(ErrorKind::NotStationary, origin, "input net is not stationary (max defect " + std::to_string(max_defect(input)) + ")");
  RegularizeResult res;
  detail::SurgeryState st{input.manifold_ptr(), input.graph(), input.positions(), input.all_breaks(), input.pinned()};
  surgery_subdivide(st, res.log);
  surgery_overlaps(st, res.log, tol.geo);
  surgery_crossings(st, res.log, tol.geo);
  surgery_identify(st, res.log, tol.geo);
  surgery_goodify(st, res.log, tol.geo);
  res.net = st.build();
  // New vertices and break points sit on the input image only to integrator
  // accuracy; a few Newton steps restore the balance.
  try {
    SolverOptions so;
    so.tol_stat = 1e-11;
    so.max_iter = 8;
    so.stall_window = 4;
    so.newton_gate = std::numeric_limits<double>::infinity();
    res.net = stationarize(res.net, so).net;
  } catch (const Error& e) {
    res.log.notes.push_back(std::string("final polish skipped: ") + e.what());
  }
  res.log.notes.push_back("overlaps of three or more edges are merged pairwise in edge-id order; intermediate graphs "
                          "depend on that order, the final image and multiplicity do not");
  for (const auto& comp : res.net.graph().components()) {
    WeightedMultigraph sub;
    for (int v : comp) sub.add_vertex(v);
    for (const auto& [id, e] : res.net.graph().edges())
      if (std::find(comp.begin(), comp.end(), e.a) != comp.end()) sub.add_edge(id, e.a, e.b, e.mult);
    if (!is_good(sub)) res.log.notes.push_back("component at vertex " + std::to_string(comp.front()) + " is not good");
  }
  return res;
}

}  // namespace geonet
