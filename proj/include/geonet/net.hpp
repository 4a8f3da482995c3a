#pragma once

// Γ-nets in the finite model. Each edge is a chain of points, its two
// vertices with optional interior break points between them, and
// consecutive chain points are joined by the short geodesic. Length is a
// function of the free (unpinned) points only.
//
// The Hessian is the symmetrized central difference of the analytic
// gradient; each perturbation recomputes only the segments at the moved
// point. Classification uses the Hessian in a g-orthonormal frame with the
// tangential direction removed at points with exactly two edge-ends, where
// sliding along the geodesic is a reparametrization.

#include "geonet/geodesic.hpp"
#include "geonet/multigraph.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace geonet {

/// A graph vertex, or the index-th interior break point of an edge counted
/// from the edge's `a` end.
struct NetPoint {
  int vertex = -1;
  int edge = -1;
  int index = -1;
  bool is_vertex() const { return vertex >= 0; }
};

struct SegmentRef {
  int p = 0, q = 0;  // point indices
  int edge = 0;
  int mult = 1;
};

class GammaNet {
 public:
  GammaNet() = default;

  GammaNet(ManifoldPtr m, WeightedMultigraph g, const std::map<int, ChartPoint>& positions,
           const std::map<int, std::vector<ChartPoint>>& breaks = {}, std::set<int> pinned = {})
      : m_(std::move(m)), graph_(std::move(g)), pinned_(std::move(pinned)) {
    const char* origin = "net::build";
    if (!m_) fail(ErrorKind::InvalidInput, origin, "no manifold");
    for (int v : graph_.vertices()) {
      auto it = positions.find(v);
      if (it == positions.end()) fail(ErrorKind::InvalidInput, origin, "vertex " + std::to_string(v) + " has no position");
      vertex_index_[v] = static_cast<int>(points_.size());
      points_.push_back(it->second);
      labels_.push_back({v, -1, -1});
    }
    for (const auto& [v, p] : positions)
      if (!graph_.has_vertex(v)) fail(ErrorKind::InvalidInput, origin, "position for unknown vertex " + std::to_string(v));
    for (int v : pinned_)
      if (!graph_.has_vertex(v)) fail(ErrorKind::InvalidInput, origin, "pinned vertex " + std::to_string(v) + " unknown");
    for (const auto& [e, pts] : breaks)
      if (!graph_.has_edge(e)) fail(ErrorKind::InvalidInput, origin, "break points for unknown edge " + std::to_string(e));
    for (const auto& [id, e] : graph_.edges()) {
      std::vector<int> chain{vertex_index_[e.a]};
      if (auto it = breaks.find(id); it != breaks.end()) {
        for (std::size_t k = 0; k < it->second.size(); ++k) {
          chain.push_back(static_cast<int>(points_.size()));
          points_.push_back(it->second[k]);
          labels_.push_back({-1, id, static_cast<int>(k)});
        }
      }
      chain.push_back(vertex_index_[e.b]);
      for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
        edge_segments_[id].push_back(static_cast<int>(refs_.size()));
        refs_.push_back({chain[k], chain[k + 1], id, e.mult});
      }
      edge_points_[id] = std::move(chain);
    }
    index();
    for (auto& p : points_) m_->checked_metric(p.chart, p.x);
    realize(nullptr, true);
  }

  const Manifold& manifold() const { return *m_; }
  const ManifoldPtr& manifold_ptr() const { return m_; }
  const WeightedMultigraph& graph() const { return graph_; }
  const std::set<int>& pinned() const { return pinned_; }

  const std::vector<ChartPoint>& points() const { return points_; }
  const std::vector<NetPoint>& labels() const { return labels_; }
  const std::vector<SegmentRef>& segment_refs() const { return refs_; }
  const std::vector<GeodesicSegment>& segments() const { return geo_; }
  const std::vector<std::vector<int>>& incident() const { return incident_; }
  /// Point indices along an edge, from its `a` vertex to its `b` vertex.
  const std::vector<int>& edge_points(int e) const { return edge_points_.at(e); }
  const std::vector<int>& edge_segments(int e) const { return edge_segments_.at(e); }
  int vertex_point(int v) const { return vertex_index_.at(v); }

  const ChartPoint& position(int v) const { return points_[vertex_index_.at(v)]; }
  std::map<int, ChartPoint> positions() const {
    std::map<int, ChartPoint> out;
    for (const auto& [v, i] : vertex_index_) out[v] = points_[i];
    return out;
  }
  std::vector<ChartPoint> breaks(int e) const {
    const auto& c = edge_points_.at(e);
    std::vector<ChartPoint> out;
    for (std::size_t k = 1; k + 1 < c.size(); ++k) out.push_back(points_[c[k]]);
    return out;
  }
  std::map<int, std::vector<ChartPoint>> all_breaks() const {
    std::map<int, std::vector<ChartPoint>> out;
    for (const auto& [id, c] : edge_points_)
      if (c.size() > 2) out[id] = breaks(id);
    return out;
  }

  bool is_free(int point) const { return free_slot_[point] >= 0; }
  /// Point indices of free points, in coordinate order.
  const std::vector<int>& free_points() const { return free_; }
  int free_slot(int point) const { return free_slot_[point]; }

  VecX coordinates() const {
    VecX x(2 * free_.size());
    for (std::size_t k = 0; k < free_.size(); ++k) x.segment<2>(2 * k) = points_[free_[k]].x;
    return x;
  }

  /// Same combinatorics and charts, new free coordinates; unchanged segments
  /// are reused and the others warm-started.
  GammaNet with_coordinates(const VecX& x, bool record = true) const {
    if (x.size() != static_cast<Eigen::Index>(2 * free_.size()))
      fail(ErrorKind::InvalidInput, "net::with_coordinates", "coordinate vector has the wrong size");
    std::vector<ChartPoint> pts = points_;
    for (std::size_t k = 0; k < free_.size(); ++k) pts[free_[k]].x = x.segment<2>(2 * k);
    return with_points(std::move(pts), record);
  }

  GammaNet with_points(std::vector<ChartPoint> pts, bool record = true) const {
    if (pts.size() != points_.size()) fail(ErrorKind::InvalidInput, "net::with_points", "point count mismatch");
    GammaNet n = *this;
    n.points_ = std::move(pts);
    std::vector<char> dirty(refs_.size(), 0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const bool same = n.points_[i].chart == points_[i].chart && n.points_[i].x == points_[i].x;
      if (!same) {
        n.m_->checked_metric(n.points_[i].chart, n.points_[i].x);
        for (int s : incident_[i]) dirty[s] = 1;
      }
    }
    n.realize(&dirty, record);
    return n;
  }

  /// Same configuration on another metric of the same atlas.
  GammaNet with_manifold(ManifoldPtr m) const {
    GammaNet n = *this;
    n.m_ = std::move(m);
    std::vector<char> dirty(refs_.size(), 1);
    n.realize(&dirty, true);
    return n;
  }

  /// Points moved to their preferred charts and wrapped.
  GammaNet canonicalized() const {
    std::vector<ChartPoint> pts = points_;
    bool changed = false;
    for (auto& p : pts) {
      const ChartPoint c = m_->canonical(p);
      if (c.chart != p.chart || c.x != p.x) {
        p = c;
        changed = true;
      }
    }
    if (!changed) return *this;
    GammaNet n = *this;
    n.points_ = std::move(pts);
    std::vector<char> dirty(refs_.size(), 0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (n.points_[i].chart != points_[i].chart || n.points_[i].x != points_[i].x) {
        for (int s : incident_[i]) dirty[s] = 1;
      }
    }
    // Chart changes invalidate warm starts.
    n.realize(&dirty, true, false);
    return n;
  }

  /// Unweighted length of an edge image.
  double edge_length(int e) const {
    double s = 0.0;
    for (int k : edge_segments_.at(e)) s += geo_[k].length;
    return s;
  }

  /// Concatenated samples along an edge, from `a` to `b`.
  std::vector<ChartPoint> edge_samples(int e) const {
    std::vector<ChartPoint> out;
    for (int k : edge_segments_.at(e)) {
      const auto& s = geo_[k].samples;
      out.insert(out.end(), out.empty() ? s.begin() : s.begin() + 1, s.end());
    }
    return out;
  }

  /// Recomputes segments, optionally only the flagged ones.
  void realize(const std::vector<char>* dirty, bool record, bool warm = true) {
    geo_.resize(refs_.size());
    for (std::size_t s = 0; s < refs_.size(); ++s) {
      if (dirty && !(*dirty)[s]) continue;
      BvpOptions o;
      o.record = record;
      const bool have = warm && dirty && geo_[s].steps > 0 && geo_[s].length > 0;
      GeodesicSegment prev;
      if (have) {
        prev = geo_[s];
        o.warm = &prev;
      }
      geo_[s] = geodesic_bvp(*m_, points_[refs_[s].p], points_[refs_[s].q], o);
    }
  }

 private:
  void index() {
    incident_.assign(points_.size(), {});
    for (std::size_t s = 0; s < refs_.size(); ++s) {
      incident_[refs_[s].p].push_back(static_cast<int>(s));
      incident_[refs_[s].q].push_back(static_cast<int>(s));
    }
    free_.clear();
    free_slot_.assign(points_.size(), -1);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (labels_[i].is_vertex() && pinned_.count(labels_[i].vertex)) continue;
      free_slot_[i] = static_cast<int>(free_.size());
      free_.push_back(static_cast<int>(i));
    }
  }

  ManifoldPtr m_;
  WeightedMultigraph graph_;
  std::set<int> pinned_;
  std::vector<ChartPoint> points_;
  std::vector<NetPoint> labels_;
  std::map<int, int> vertex_index_;
  std::map<int, std::vector<int>> edge_points_;
  std::map<int, std::vector<int>> edge_segments_;
  std::vector<SegmentRef> refs_;
  std::vector<GeodesicSegment> geo_;
  std::vector<std::vector<int>> incident_;
  std::vector<int> free_;
  std::vector<int> free_slot_;
};

/// Σ_E n(E)·L(E).
inline double net_length(const GammaNet& net) {
  double s = 0.0;
  for (std::size_t k = 0; k < net.segments().size(); ++k) s += net.segment_refs()[k].mult * net.segments()[k].length;
  return s;
}

struct PointDefect {
  NetPoint label;
  ChartPoint at;
  Vec2 b = Vec2::Zero();  // Σ n·(unit inward tangent), chart components
  double norm = 0.0;      // |b|_g
  bool pinned = false;
};

namespace detail {

/// Σ n·u over the segment ends at a point, in the point's chart.
inline Vec2 defect_at(const Manifold& m, int i, const std::vector<SegmentRef>& refs,
                      const std::vector<GeodesicSegment>& geo, const std::vector<int>& incident) {
  Vec2 b = Vec2::Zero();
  for (int s : incident) {
    if (refs[s].p == i) b += refs[s].mult * geo[s].start_tangent(m);
    if (refs[s].q == i) b += refs[s].mult * geo[s].end_tangent(m);
  }
  return b;
}

/// Unit inward tangent of the first segment end at a point.
inline Vec2 first_tangent(const GammaNet& net, int i) {
  const int s = net.incident()[i].front();
  const auto& g = net.segments()[s];
  return net.segment_refs()[s].p == i ? g.start_tangent(net.manifold()) : g.end_tangent(net.manifold());
}

inline void check_edges(const GammaNet& net, const char* origin) {
  for (const auto& g : net.segments())
    if (!(g.length > 0)) fail(ErrorKind::DegenerateEdge, origin, "zero-length edge segment");
}

}  // namespace detail

inline std::vector<PointDefect> balancing_defect(const GammaNet& net) {
  detail::check_edges(net, "net::balancing_defect");
  std::vector<PointDefect> out;
  const Manifold& m = net.manifold();
  for (std::size_t i = 0; i < net.points().size(); ++i) {
    PointDefect d;
    d.label = net.labels()[i];
    d.at = net.points()[i];
    d.b = detail::defect_at(m, static_cast<int>(i), net.segment_refs(), net.segments(), net.incident()[i]);
    d.norm = norm(m.metric(d.at.chart, d.at.x), d.b);
    d.pinned = !net.is_free(static_cast<int>(i));
    out.push_back(d);
  }
  return out;
}

/// max |B| over free points (vertices and break points).
inline double max_defect(const GammaNet& net) {
  double mx = 0.0;
  for (const auto& d : balancing_defect(net))
    if (!d.pinned) mx = std::max(mx, d.norm);
  return mx;
}

/// ∂L/∂x over free coordinates: −g·B at each free point.
inline VecX length_gradient(const GammaNet& net) {
  detail::check_edges(net, "net::length_gradient");
  const Manifold& m = net.manifold();
  VecX grad(2 * net.free_points().size());
  for (std::size_t k = 0; k < net.free_points().size(); ++k) {
    const int i = net.free_points()[k];
    const ChartPoint& p = net.points()[i];
    grad.segment<2>(2 * k) =
        -m.metric(p.chart, p.x) * detail::defect_at(m, i, net.segment_refs(), net.segments(), net.incident()[i]);
  }
  return grad;
}

namespace detail {

/// Symmetrized central differences of the analytic gradient, step
/// rel·(1 + |x_c|) per coordinate.
inline MatX fd_hessian(const GammaNet& net, double rel = 1e-5) {
  const Manifold& m = net.manifold();
  const auto& refs = net.segment_refs();
  const auto& inc = net.incident();
  const int n = static_cast<int>(2 * net.free_points().size());
  MatX h = MatX::Zero(n, n);
  std::vector<ChartPoint> pts = net.points();
  std::vector<GeodesicSegment> geo = net.segments();
  for (std::size_t k = 0; k < net.free_points().size(); ++k) {
    const int i = net.free_points()[k];
    std::set<int> touched{i};
    for (int s : inc[i]) {
      touched.insert(refs[s].p);
      touched.insert(refs[s].q);
    }
    for (int c = 0; c < 2; ++c) {
      const double step = rel * (1.0 + std::abs(net.points()[i].x[c]));
      std::map<int, Vec2> gplus;
      for (int sign : {1, -1}) {
        pts[i] = net.points()[i];
        pts[i].x[c] += sign * step;
        for (int s : inc[i]) {
          BvpOptions o;
          o.record = false;
          o.enforce_inj = false;
          o.warm = &net.segments()[s];
          geo[s] = geodesic_bvp(m, pts[refs[s].p], pts[refs[s].q], o);
        }
        for (int j : touched) {
          if (!net.is_free(j)) continue;
          const Vec2 gj = -m.metric(pts[j].chart, pts[j].x) * defect_at(m, j, refs, geo, inc[j]);
          if (sign == 1) {
            gplus[j] = gj;
          } else {
            h.block<2, 1>(2 * net.free_slot(j), 2 * k + c) = (gplus[j] - gj) / (2 * step);
          }
        }
      }
      pts[i] = net.points()[i];
      for (int s : inc[i]) geo[s] = net.segments()[s];
    }
  }
  return 0.5 * (h + h.transpose());
}

/// Columns: a g-orthonormal frame per free point, only the normal at points
/// with exactly two segment ends.
inline MatX reduced_frame(const GammaNet& net) {
  const Manifold& m = net.manifold();
  std::vector<std::pair<int, Vec2>> cols;
  for (std::size_t k = 0; k < net.free_points().size(); ++k) {
    const int i = net.free_points()[k];
    const ChartPoint& p = net.points()[i];
    const Mat2 g = m.metric(p.chart, p.x);
    auto gdot = [&](const Vec2& a, const Vec2& b) { return a.dot(g * b); };
    if (net.incident()[i].size() == 2) {
      const Vec2 u = first_tangent(net, i);
      Vec2 nrm(-u[1], u[0]);
      nrm -= gdot(nrm, u) / gdot(u, u) * u;
      cols.push_back({static_cast<int>(k), nrm / std::sqrt(gdot(nrm, nrm))});
    } else {
      const Vec2 e1 = Vec2(1, 0) / std::sqrt(g(0, 0));
      Vec2 e2(0, 1);
      e2 -= gdot(e2, e1) * e1;
      cols.push_back({static_cast<int>(k), e1});
      cols.push_back({static_cast<int>(k), e2 / std::sqrt(gdot(e2, e2))});
    }
  }
  MatX q = MatX::Zero(2 * net.free_points().size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) q.block<2, 1>(2 * cols[c].first, c) = cols[c].second;
  return q;
}

}  // namespace detail

enum class Classification { Nondegenerate, Degenerate, Indeterminate };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::Nondegenerate: return "nondegenerate";
    case Classification::Degenerate: return "degenerate";
    case Classification::Indeterminate: return "indeterminate";
  }
  return "?";
}

struct VariationReport {
  double length = 0.0;
  std::vector<PointDefect> defects;
  double max_defect = 0.0;
  VecX gradient;
  MatX hessian;              // free coordinates, symmetrized
  VecX hessian_eigenvalues;  // of `hessian`
  MatX frame;                // reduced frame Q, hessian → Qᵀ·hessian·Q
  VecX eigenvalues;          // of the reduced Hessian, ascending
  MatX eigenvectors;
  MatX null_space;           // reduced coordinates, one column per null vector
  std::vector<double> parallel_residuals;
  Classification classification = Classification::Indeterminate;
  std::string caveat = "finite-model Hessian: null space of the broken-geodesic model";
};

struct ClassifyOptions {
  Tolerances tol;
  double hessian_step = 1e-5;
  double band = 3.0;  // eigenvalues within a factor `band` of tol.null are indeterminate
};

namespace detail {

/// Parallelism residual of a displacement field given at the free points
/// (zero at pinned ones): normal components compared across each segment,
/// tangential components across each edge between points with full
/// frames, each divided by max|W|·length.
inline double parallel_residual(const GammaNet& net, const std::vector<Vec2>& w) {
  const Manifold& m = net.manifold();
  double wmax = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    wmax = std::max(wmax, norm(m.metric(net.points()[i].chart, net.points()[i].x), w[i]));
  if (!(wmax > 0)) return 0.0;
  auto split = [&](int i, const Vec2& v, const Vec2& u, Vec2& nrm) {
    const Mat2 g = m.metric(net.points()[i].chart, net.points()[i].x);
    const double t = v.dot(g * u) / u.dot(g * u);
    nrm = v - t * u;
    return t * std::sqrt(u.dot(g * u));
  };
  double res = 0.0;
  const auto& refs = net.segment_refs();
  for (std::size_t s = 0; s < refs.size(); ++s) {
    const auto& seg = net.segments()[s];
    const int q = refs[s].q;
    const Vec2 pw = parallel_transport(m, seg, w[refs[s].p]);
    const Vec2 u = seg.end_tangent(m);
    Vec2 n1, n2;
    split(q, pw, u, n1);
    split(q, w[q], u, n2);
    const Mat2 g = m.metric(net.points()[q].chart, net.points()[q].x);
    res = std::max(res, norm(g, n1 - n2) / (wmax * seg.length));
  }
  auto full = [&](int i) { return !net.is_free(i) || net.incident()[i].size() != 2; };
  for (const auto& [id, e] : net.graph().edges()) {
    const auto& chain = net.edge_points(id);
    if (!full(chain.front()) || !full(chain.back())) continue;
    Vec2 v = w[chain.front()];
    for (int s : net.edge_segments(id)) v = parallel_transport(m, net.segments()[s], v);
    const auto& last = net.segments()[net.edge_segments(id).back()];
    const Vec2 u = last.end_tangent(m);
    Vec2 tmp;
    const double t1 = split(chain.back(), v, u, tmp), t2 = split(chain.back(), w[chain.back()], u, tmp);
    res = std::max(res, std::abs(t1 - t2) / (wmax * net.edge_length(id)));
  }
  return res;
}

inline void check_cycle_breaks(const GammaNet& net, const char* origin) {
  const auto& g = net.graph();
  for (const auto& comp : g.components()) {
    bool cycle = true;
    for (int v : comp)
      if (g.degree(v) != 2) cycle = false;
    if (!cycle) continue;
    int points = 0;
    for (const auto& [id, e] : g.edges())
      if (std::find(comp.begin(), comp.end(), e.a) != comp.end()) points += static_cast<int>(net.edge_points(id).size()) - 1;
    if (points < 3) fail(ErrorKind::InvalidInput, origin, "cycle component needs at least 3 points (add break points)");
  }
}

}  // namespace detail

inline VariationReport hessian_and_classify(const GammaNet& net, const ClassifyOptions& opts = {}) {
  const char* origin = "net::hessian_and_classify";
  VariationReport r;
  r.length = net_length(net);
  r.defects = balancing_defect(net);
  r.max_defect = max_defect(net);
  if (r.max_defect > opts.tol.stat)
    fail(ErrorKind::NotStationary, origin, "max balancing defect " + std::to_string(r.max_defect) + " exceeds tol_stat");
  detail::check_cycle_breaks(net, origin);
  r.gradient = length_gradient(net);
  r.hessian = detail::fd_hessian(net, opts.hessian_step);
  if (r.hessian.size() == 0) {
    r.classification = Classification::Nondegenerate;
    return r;
  }
  r.hessian_eigenvalues = Eigen::SelfAdjointEigenSolver<MatX>(r.hessian, Eigen::EigenvaluesOnly).eigenvalues();
  r.frame = detail::reduced_frame(net);
  const MatX hr = r.frame.transpose() * r.hessian * r.frame;
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (hr + hr.transpose()));
  r.eigenvalues = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  const double lmax = r.eigenvalues.cwiseAbs().maxCoeff();
  std::vector<int> null;
  bool borderline = false;
  for (int k = 0; k < r.eigenvalues.size(); ++k) {
    const double rel = std::abs(r.eigenvalues[k]) / lmax;
    if (rel < opts.tol.null) null.push_back(k);
    if (rel > opts.tol.null / opts.band && rel < opts.tol.null * opts.band) borderline = true;
  }
  r.null_space = MatX(r.eigenvalues.size(), null.size());
  bool parallel = true;
  for (std::size_t c = 0; c < null.size(); ++c) {
    r.null_space.col(c) = r.eigenvectors.col(null[c]);
    const VecX disp = r.frame * r.null_space.col(c);
    std::vector<Vec2> w(net.points().size(), Vec2::Zero());
    for (std::size_t k = 0; k < net.free_points().size(); ++k) w[net.free_points()[k]] = disp.segment<2>(2 * k);
    const double res = detail::parallel_residual(net, w);
    r.parallel_residuals.push_back(res);
    if (res >= opts.tol.par) parallel = false;
  }
  if (borderline) r.classification = Classification::Indeterminate;
  else r.classification = parallel ? Classification::Nondegenerate : Classification::Degenerate;
  return r;
}

}  // namespace geonet
