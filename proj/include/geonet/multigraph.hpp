#pragma once

// Weighted multigraphs: finite 1-complexes with positive integer edge
// multiplicities, and the rewrites used by net regularization. Identity is
// by id; every rewrite returns a fresh graph plus the ids it created.

#include "geonet/core.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace geonet {

struct Edge {
  int id = 0;
  int a = 0, b = 0;  // endpoints, equal for loops
  int mult = 1;
  bool is_loop() const { return a == b; }
  int other(int v) const { return v == a ? b : a; }
};

struct EdgeEnd {
  int edge;
  int side;  // 0: the edge's `a` end, 1: its `b` end
};

class WeightedMultigraph {
 public:
  WeightedMultigraph() = default;

  int add_vertex() {
    const int id = vertices_.empty() ? 0 : *vertices_.rbegin() + 1;
    vertices_.insert(id);
    return id;
  }
  void add_vertex(int id) {
    if (id < 0) fail(ErrorKind::InvalidInput, "multigraph::add_vertex", "vertex ids must be non-negative");
    if (!vertices_.insert(id).second)
      fail(ErrorKind::InvalidInput, "multigraph::add_vertex", "duplicate vertex " + std::to_string(id));
  }
  int add_edge(int a, int b, int mult) { return add_edge(next_edge_id(), a, b, mult); }
  int add_edge(int id, int a, int b, int mult) {
    const char* origin = "multigraph::add_edge";
    if (!has_vertex(a) || !has_vertex(b)) fail(ErrorKind::InvalidInput, origin, "edge endpoint is not a vertex");
    if (mult < 1) fail(ErrorKind::InvalidInput, origin, "multiplicity must be a positive integer");
    if (id < 0 || edges_.count(id)) fail(ErrorKind::InvalidInput, origin, "bad or duplicate edge id " + std::to_string(id));
    edges_[id] = Edge{id, a, b, mult};
    return id;
  }
  void remove_edge(int id) { edges_.erase(require_edge(id, "multigraph::remove_edge").id); }
  void remove_vertex(int v) {
    require_vertex(v, "multigraph::remove_vertex");
    if (degree(v) != 0) fail(ErrorKind::InvalidInput, "multigraph::remove_vertex", "vertex still has edges");
    vertices_.erase(v);
  }

  bool has_vertex(int v) const { return vertices_.count(v) != 0; }
  bool has_edge(int e) const { return edges_.count(e) != 0; }
  const Edge& edge(int e) const { return require_edge(e, "multigraph::edge"); }
  Edge& edge_mut(int e) { return const_cast<Edge&>(require_edge(e, "multigraph::edge")); }
  const std::set<int>& vertices() const { return vertices_; }
  const std::map<int, Edge>& edges() const { return edges_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  int next_edge_id() const { return edges_.empty() ? 0 : edges_.rbegin()->first + 1; }
  int next_vertex_id() const { return vertices_.empty() ? 0 : *vertices_.rbegin() + 1; }

  /// Edge-ends at v; a loop contributes two.
  std::vector<EdgeEnd> incidences(int v) const {
    std::vector<EdgeEnd> out;
    for (const auto& [id, e] : edges_) {
      if (e.a == v) out.push_back({id, 0});
      if (e.b == v) out.push_back({id, 1});
    }
    return out;
  }
  std::map<int, std::vector<EdgeEnd>> adjacency() const {
    std::map<int, std::vector<EdgeEnd>> adj;
    for (int v : vertices_) adj[v];
    for (const auto& [id, e] : edges_) {
      adj[e.a].push_back({id, 0});
      adj[e.b].push_back({id, 1});
    }
    return adj;
  }
  int degree(int v) const { return static_cast<int>(incidences(v).size()); }

  /// Connected components as vertex sets, ordered by smallest id.
  std::vector<std::vector<int>> components() const {
    std::map<int, int> parent;
    for (int v : vertices_) parent[v] = v;
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (const auto& [id, e] : edges_) {
      const int ra = find(e.a), rb = find(e.b);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    std::map<int, std::vector<int>> groups;
    for (int v : vertices_) groups[find(v)].push_back(v);
    std::vector<std::vector<int>> out;
    for (auto& [r, vs] : groups) out.push_back(std::move(vs));
    return out;
  }
  bool connected() const { return components().size() == 1; }

  /// Total multiplicity-weighted edge count; preserved by subdivision up to
  /// the piece count, used for bookkeeping checks.
  long total_multiplicity() const {
    long s = 0;
    for (const auto& [id, e] : edges_) s += e.mult;
    return s;
  }

  void require_vertex(int v, const char* origin) const {
    if (!has_vertex(v)) fail(ErrorKind::InvalidInput, origin, "no vertex " + std::to_string(v));
  }
  const Edge& require_edge(int e, const char* origin) const {
    auto it = edges_.find(e);
    if (it == edges_.end()) fail(ErrorKind::InvalidInput, origin, "no edge " + std::to_string(e));
    return it->second;
  }

  friend bool operator==(const WeightedMultigraph& x, const WeightedMultigraph& y) {
    if (x.vertices_ != y.vertices_ || x.edges_.size() != y.edges_.size()) return false;
    for (const auto& [id, e] : x.edges_) {
      auto it = y.edges_.find(id);
      if (it == y.edges_.end() || it->second.a != e.a || it->second.b != e.b || it->second.mult != e.mult) return false;
    }
    return true;
  }

 private:
  std::set<int> vertices_;
  std::map<int, Edge> edges_;
};

/// Result of a rewrite: the new graph and the ids it introduced, in order.
struct Rewrite {
  WeightedMultigraph graph;
  std::vector<int> new_vertices;
  std::vector<int> new_edges;
};

inline bool is_good_star(const WeightedMultigraph& g) {
  if (g.vertex_count() == 0 || !g.connected()) return false;
  for (const auto& [v, ends] : g.adjacency())
    if (ends.size() < 3) return false;
  return true;
}

/// True for good* graphs and for connected cycle graphs (every vertex with
/// exactly two edge-ends) of one uniform multiplicity.
inline bool is_good(const WeightedMultigraph& g) {
  if (is_good_star(g)) return true;
  if (g.edge_count() == 0 || !g.connected()) return false;
  for (const auto& [v, ends] : g.adjacency())
    if (ends.size() != 2) return false;
  const int n = g.edges().begin()->second.mult;
  for (const auto& [id, e] : g.edges())
    if (e.mult != n) return false;
  return true;
}

/// Replaces E by a path of l edges through l-1 new vertices, from E.a to E.b.
inline Rewrite subdivide_edge(const WeightedMultigraph& g, int e, int l) {
  const char* origin = "multigraph::subdivide_edge";
  const Edge old = g.require_edge(e, origin);
  if (l < 1) fail(ErrorKind::InvalidInput, origin, "piece count must be at least 1");
  Rewrite r{g, {}, {}};
  if (l == 1) return r;
  r.graph.remove_edge(e);
  int prev = old.a;
  for (int i = 1; i < l; ++i) {
    const int v = r.graph.add_vertex();
    r.new_vertices.push_back(v);
    r.new_edges.push_back(r.graph.add_edge(prev, v, old.mult));
    prev = v;
  }
  r.new_edges.push_back(r.graph.add_edge(prev, old.b, old.mult));
  return r;
}

/// Two edges with overlapping images. `order` lists the distinct vertices of
/// E1 ∪ E2 in their order along the common image; each edge covers the
/// stretch between its endpoints. Both edges are replaced by one edge per
/// consecutive pair in `order`, with multiplicity the sum over the covering
/// edges. For the staggered order (v11, v21, v12, v22) this gives edges of
/// multiplicity n1, n1+n2, n2.
inline Rewrite replace_overlap(const WeightedMultigraph& g, int e1, int e2, const std::vector<int>& order) {
  const char* origin = "multigraph::replace_overlap";
  const Edge a = g.require_edge(e1, origin), b = g.require_edge(e2, origin);
  if (e1 == e2) fail(ErrorKind::InvalidInput, origin, "overlapping edges must differ");
  if (a.is_loop() || b.is_loop()) fail(ErrorKind::InvalidInput, origin, "loops cannot be overlap-replaced");
  if (order.size() < 2) fail(ErrorKind::InvalidInput, origin, "order needs at least two vertices");
  std::map<int, int> pos;
  for (std::size_t i = 0; i < order.size(); ++i) {
    g.require_vertex(order[i], origin);
    if (!pos.emplace(order[i], static_cast<int>(i)).second) fail(ErrorKind::InvalidInput, origin, "repeated vertex in order");
  }
  const std::set<int> ends{a.a, a.b, b.a, b.b};
  if (ends.size() != order.size()) fail(ErrorKind::InvalidInput, origin, "order must list exactly the endpoints of both edges");
  for (int v : ends)
    if (!pos.count(v)) fail(ErrorKind::InvalidInput, origin, "order misses an endpoint");
  auto span = [&](const Edge& e) { return std::minmax(pos[e.a], pos[e.b]); };
  const auto [a0, a1] = span(a);
  const auto [b0, b1] = span(b);
  if (std::max(a0, b0) >= std::min(a1, b1)) fail(ErrorKind::InvalidInput, origin, "edges do not overlap in the given order");
  Rewrite r{g, {}, {}};
  r.graph.remove_edge(e1);
  r.graph.remove_edge(e2);
  for (int i = 0; i + 1 < static_cast<int>(order.size()); ++i) {
    int n = 0;
    if (a0 <= i && i < a1) n += a.mult;
    if (b0 <= i && i < b1) n += b.mult;
    if (n == 0) fail(ErrorKind::InvalidInput, origin, "order leaves a gap between the edges");
    r.new_edges.push_back(r.graph.add_edge(order[i], order[i + 1], n));
  }
  return r;
}

/// Transverse crossing at interior points of E1 and E2: a new vertex v and
/// the four half-edges (E1.a, v), (v, E1.b), (E2.a, v), (v, E2.b).
inline Rewrite split_at_crossing(const WeightedMultigraph& g, int e1, int e2) {
  const char* origin = "multigraph::split_at_crossing";
  const Edge a = g.require_edge(e1, origin), b = g.require_edge(e2, origin);
  if (e1 == e2) fail(ErrorKind::InvalidInput, origin, "crossing edges must differ");
  Rewrite r{g, {}, {}};
  r.graph.remove_edge(e1);
  r.graph.remove_edge(e2);
  const int v = r.graph.add_vertex();
  r.new_vertices.push_back(v);
  r.new_edges.push_back(r.graph.add_edge(a.a, v, a.mult));
  r.new_edges.push_back(r.graph.add_edge(v, a.b, a.mult));
  r.new_edges.push_back(r.graph.add_edge(b.a, v, b.mult));
  r.new_edges.push_back(r.graph.add_edge(v, b.b, b.mult));
  return r;
}

/// Quotient identifying v2 with v1; v1 survives. Edges between them become
/// loops at v1.
inline Rewrite identify_vertices(const WeightedMultigraph& g, int v1, int v2) {
  const char* origin = "multigraph::identify_vertices";
  g.require_vertex(v1, origin);
  g.require_vertex(v2, origin);
  if (v1 == v2) fail(ErrorKind::InvalidInput, origin, "vertices must differ");
  Rewrite r{g, {}, {}};
  for (const auto& [id, e] : g.edges()) {
    if (e.a != v2 && e.b != v2) continue;
    Edge& m = r.graph.edge_mut(id);
    if (m.a == v2) m.a = v1;
    if (m.b == v2) m.b = v1;
  }
  r.graph.remove_vertex(v2);
  return r;
}

/// v has exactly the two edge-ends of distinct edges E1 = (v1, v) and
/// E2 = (v, v2) with equal multiplicity; both are replaced by one edge
/// (v1, v2), a loop when v1 = v2, and v is deleted.
inline Rewrite erase_colinear_vertex(const WeightedMultigraph& g, int v, int e1, int e2) {
  const char* origin = "multigraph::erase_colinear_vertex";
  g.require_vertex(v, origin);
  const Edge a = g.require_edge(e1, origin), b = g.require_edge(e2, origin);
  if (e1 == e2) fail(ErrorKind::InvalidInput, origin, "edges must differ");
  const auto ends = g.incidences(v);
  if (ends.size() != 2) fail(ErrorKind::InvalidInput, origin, "vertex must have exactly two edge-ends");
  const std::set<int> at{ends[0].edge, ends[1].edge};
  if (at != std::set<int>{e1, e2}) fail(ErrorKind::InvalidInput, origin, "vertex edge-ends must be E1 and E2");
  if (a.mult != b.mult) fail(ErrorKind::InvalidInput, origin, "multiplicity mismatch");
  Rewrite r{g, {}, {}};
  r.graph.remove_edge(e1);
  r.graph.remove_edge(e2);
  r.graph.remove_vertex(v);
  r.new_edges.push_back(r.graph.add_edge(a.other(v), b.other(v), a.mult));
  return r;
}

}  // namespace geonet
