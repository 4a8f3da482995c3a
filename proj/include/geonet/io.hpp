#pragma once

// File formats: manifold specs, graph and net files (JSON, schema_version 1),
// failure records, CSV tables and SVG chart plots. Net coordinates are
// written with 17 significant digits, so a written net re-parses to the
// same doubles and re-writes to the same bytes.

#include "geonet/continuation.hpp"
#include "geonet/shapes.hpp"
#include "geonet/surgery.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace geonet::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline std::string fmt17(double x) {
  if (!std::isfinite(x)) fail(ErrorKind::InvalidInput, "cli::write", "non-finite number in output");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline const char* kOrigin = "cli::parse";

[[noreturn]] inline void bad(const std::string& what) { fail(ErrorKind::InvalidInput, kOrigin, what); }

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where + ": missing field \"" + key + "\"");
  return j.at(key);
}

inline double num(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) bad(where + ": number is not finite");
  return x;
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where + ": expected an integer");
  return j.get<int>();
}

inline Vec2 vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where + ": expected [x1, x2]");
  return {num(j[0], where), num(j[1], where)};
}

inline Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) bad(where + ": expected [x, y, z]");
  return {num(j[0], where), num(j[1], where), num(j[2], where)};
}

inline void check_version(const json& j, const std::string& what) {
  if (!j.is_object()) bad(what + ": expected a JSON object");
  if (!j.contains("schema_version")) bad(what + ": missing schema_version");
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion)
    bad(what + ": unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
}

}  // namespace detail

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, detail::kOrigin, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, detail::kOrigin, path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidInput, "cli::write", "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Manifolds

/// {"chart": c, "x": [x1, x2]} or {"ambient": [x, y, z]} (ray through the
/// point, embedded surfaces only).
inline ChartPoint point_from_json(const Manifold& m, const json& j, const std::string& where) {
  if (j.is_object() && j.contains("ambient")) return ray_point(m, detail::vec3(j["ambient"], where));
  const int c = detail::integer(detail::need(j, "chart", where), where);
  if (c < 0 || c >= static_cast<int>(m.charts().size())) detail::bad(where + ": chart index out of range");
  const ChartPoint p{c, detail::vec2(detail::need(j, "x", where), where)};
  m.checked_metric(p.chart, p.x);
  return p;
}

inline Bump bump_from_json(const Manifold& m, const json& j) {
  const std::string w = "bump";
  Bump b;
  const std::string kind = j.value("kind", "smooth");
  if (kind == "smooth") b.kind = Bump::Kind::Smooth;
  else if (kind == "constant") b.kind = Bump::Kind::Constant;
  else if (kind == "zero") b.kind = Bump::Kind::Zero;
  else detail::bad("bump: unknown kind \"" + kind + "\"");
  if (b.kind == Bump::Kind::Smooth) {
    b.center = point_from_json(m, detail::need(j, "center", w), w + ".center");
    b.radius = detail::num(detail::need(j, "radius", w), w + ".radius");
  }
  if (b.kind != Bump::Kind::Zero) b.amplitude = detail::num(detail::need(j, "amplitude", w), w + ".amplitude");
  else b.amplitude = 0.0;
  return b;
}

inline ManifoldPtr manifold_from_json(const json& j) {
  const std::string w = "manifold";
  const std::string type = detail::need(j, "type", w).get<std::string>();
  const double inj = j.contains("inj_lb") ? detail::num(j["inj_lb"], w + ".inj_lb") : 0.0;
  ManifoldPtr m;
  if (type == "round_sphere") {
    m = make_round_sphere(j.contains("radius") ? detail::num(j["radius"], w + ".radius") : 1.0, inj);
  } else if (type == "ellipsoid") {
    const Vec3 a = detail::vec3(detail::need(j, "axes", w), w + ".axes");
    m = make_ellipsoid(a[0], a[1], a[2], inj);
  } else if (type == "flat_torus") {
    const Vec2 p = j.contains("periods") ? detail::vec2(j["periods"], w + ".periods") : Vec2(2 * kPi, 2 * kPi);
    if (!(p[0] > 0 && p[1] > 0)) detail::bad("manifold.periods must be positive");
    m = make_flat_torus(p[0], p[1]);
  } else if (type == "custom") {
    CustomManifoldSpec s;
    s.inj_radius_lb = detail::num(detail::need(j, "inj_lb", w), w + ".inj_lb");
    for (const auto& c : detail::need(j, "charts", w)) {
      CustomChartSpec cs;
      cs.info.lo = detail::vec2(detail::need(c, "lo", "chart"), "chart.lo");
      cs.info.hi = detail::vec2(detail::need(c, "hi", "chart"), "chart.hi");
      if (c.contains("periodic")) cs.info.periodic = {c["periodic"].at(0).get<bool>(), c["periodic"].at(1).get<bool>()};
      cs.g11 = detail::need(c, "g11", "chart").get<std::string>();
      cs.g12 = detail::need(c, "g12", "chart").get<std::string>();
      cs.g22 = detail::need(c, "g22", "chart").get<std::string>();
      s.charts.push_back(cs);
    }
    for (const auto& t : j.value("transitions", json::array())) {
      s.transitions.push_back({detail::integer(detail::need(t, "from", "transition"), "transition.from"),
                               detail::integer(detail::need(t, "to", "transition"), "transition.to"),
                               detail::need(t, "y1", "transition").get<std::string>(),
                               detail::need(t, "y2", "transition").get<std::string>()});
    }
    for (const auto& q : j.value("quadrature", json::array())) {
      QuadratureDomain d;
      d.chart = detail::integer(detail::need(q, "chart", "quadrature"), "quadrature.chart");
      if (q.contains("radius")) {
        d.shape = QuadratureDomain::Shape::Disk;
        d.center = detail::vec2(detail::need(q, "center", "quadrature"), "quadrature.center");
        d.radius = detail::num(q["radius"], "quadrature.radius");
      } else {
        d.lo = detail::vec2(detail::need(q, "lo", "quadrature"), "quadrature.lo");
        d.hi = detail::vec2(detail::need(q, "hi", "quadrature"), "quadrature.hi");
      }
      s.quadrature.push_back(d);
    }
    m = std::make_shared<CustomManifold>(s);
  } else {
    detail::bad("manifold: unknown type \"" + type + "\"");
  }
  if (j.contains("scale")) m = scaled(m, detail::num(j["scale"], w + ".scale"));
  if (j.contains("conformal")) {
    const json& c = j["conformal"];
    const double t = detail::num(detail::need(c, "t", "conformal"), "conformal.t");
    m = std::make_shared<ConformalManifold>(m, bump_from_json(*m, detail::need(c, "bump", "conformal")), t);
  }
  return m;
}

inline ManifoldPtr read_manifold(const std::string& path) {
  const json j = read_json(path);
  detail::check_version(j, path);
  return manifold_from_json(j);
}

// ---------------------------------------------------------------------------
// Graphs and nets

inline WeightedMultigraph graph_from_json(const json& j) {
  WeightedMultigraph g;
  for (const auto& v : detail::need(j, "vertices", "graph")) {
    if (v.is_object()) g.add_vertex(detail::integer(detail::need(v, "id", "vertex"), "vertex.id"));
    else g.add_vertex(detail::integer(v, "graph.vertices"));
  }
  for (const auto& e : detail::need(j, "edges", "graph")) {
    const int a = detail::integer(detail::need(e, "a", "edge"), "edge.a");
    const int b = detail::integer(detail::need(e, "b", "edge"), "edge.b");
    const int mult = e.contains("mult") ? detail::integer(e["mult"], "edge.mult") : 1;
    if (e.contains("id")) g.add_edge(detail::integer(e["id"], "edge.id"), a, b, mult);
    else g.add_edge(a, b, mult);
  }
  return g;
}

inline WeightedMultigraph read_graph(const std::string& path) {
  const json j = read_json(path);
  detail::check_version(j, path);
  return graph_from_json(j);
}

struct NetFile {
  GammaNet net;
  json manifold;  // spec embedded in the file, null when absent
};

/// `m` overrides the embedded manifold spec when given.
inline NetFile net_from_json(const json& j, ManifoldPtr m = nullptr) {
  NetFile out;
  if (j.contains("manifold")) out.manifold = j["manifold"];
  if (!m) {
    if (out.manifold.is_null()) detail::bad("net: no manifold given (embed one or pass --manifold)");
    m = manifold_from_json(out.manifold);
  }
  const WeightedMultigraph g = graph_from_json(j);
  std::map<int, ChartPoint> pos;
  std::map<int, std::vector<ChartPoint>> br;
  std::set<int> pinned;
  for (const auto& v : j["vertices"]) {
    if (!v.is_object()) detail::bad("net: vertices need positions");
    const int id = v["id"].get<int>();
    pos[id] = point_from_json(*m, v, "vertex " + std::to_string(id));
    if (v.value("pinned", false)) pinned.insert(id);
  }
  for (const auto& e : j["edges"]) {
    if (!e.contains("breaks")) continue;
    if (!e.contains("id")) detail::bad("net: edges with break points need an id");
    const int id = e["id"].get<int>();
    for (const auto& p : e["breaks"]) br[id].push_back(point_from_json(*m, p, "edge " + std::to_string(id) + " break"));
  }
  out.net = GammaNet(m, g, pos, br, pinned);
  return out;
}

inline NetFile read_net(const std::string& path, ManifoldPtr m = nullptr) {
  const json j = read_json(path);
  detail::check_version(j, path);
  return net_from_json(j, std::move(m));
}

namespace detail {

inline std::string point_text(const ChartPoint& p) {
  return "{\"chart\": " + std::to_string(p.chart) + ", \"x\": [" + fmt17(p.x[0]) + ", " + fmt17(p.x[1]) + "]}";
}

}  // namespace detail

/// Net file text; `manifold` (may be null) is embedded verbatim.
inline std::string net_to_text(const GammaNet& net, const json& manifold = json()) {
  std::ostringstream o;
  o << "{\n  \"schema_version\": " << kSchemaVersion << ",\n";
  if (!manifold.is_null()) o << "  \"manifold\": " << manifold.dump() << ",\n";
  o << "  \"vertices\": [";
  bool first = true;
  for (int v : net.graph().vertices()) {
    const ChartPoint& p = net.position(v);
    o << (first ? "\n" : ",\n") << "    {\"id\": " << v << ", \"chart\": " << p.chart << ", \"x\": [" << fmt17(p.x[0])
      << ", " << fmt17(p.x[1]) << "]";
    if (net.pinned().count(v)) o << ", \"pinned\": true";
    o << "}";
    first = false;
  }
  o << "\n  ],\n  \"edges\": [";
  first = true;
  for (const auto& [id, e] : net.graph().edges()) {
    o << (first ? "\n" : ",\n") << "    {\"id\": " << id << ", \"a\": " << e.a << ", \"b\": " << e.b
      << ", \"mult\": " << e.mult << ", \"breaks\": [";
    const auto& br = net.breaks(id);
    for (std::size_t k = 0; k < br.size(); ++k) o << (k ? ", " : "") << detail::point_text(br[k]);
    o << "]}";
    first = false;
  }
  o << "\n  ]\n}\n";
  return o.str();
}

inline std::string graph_to_text(const WeightedMultigraph& g) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["vertices"] = json::array();
  for (int v : g.vertices()) j["vertices"].push_back(v);
  j["edges"] = json::array();
  for (const auto& [id, e] : g.edges()) j["edges"].push_back({{"id", id}, {"a", e.a}, {"b", e.b}, {"mult", e.mult}});
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Records and reports

inline json failure_record(const Error& e) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["status"] = "failure";
  j["kind"] = std::string(to_string(e.kind()));
  j["origin"] = e.origin();
  j["detail"] = e.detail();
  j["exit_code"] = is_input_error(e.kind()) ? 2 : 3;
  return j;
}

inline json surgery_log_json(const SurgeryLog& log) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["steps"] = json::array();
  for (const auto& s : log.steps) {
    json step;
    step["pass"] = s.pass;
    step["op"] = s.op;
    step["edges"] = s.edges;
    step["vertices"] = s.vertices;
    if (!s.order.empty()) step["order"] = s.order;
    step["new_edges"] = s.new_edges;
    step["new_vertices"] = s.new_vertices;
    if (!s.multiplicities.empty()) step["multiplicities"] = s.multiplicities;
    json counter = json::array();
    for (double c : s.counter) counter.push_back(fmt17(c));
    step["counter"] = counter;
    if (!s.positions.empty()) {
      json pos = json::object();
      for (const auto& [v, p] : s.positions) pos[std::to_string(v)] = {{"chart", p.chart}, {"x", {fmt17(p.x[0]), fmt17(p.x[1])}}};
      step["positions"] = pos;
    }
    j["steps"].push_back(step);
  }
  j["notes"] = log.notes;
  return j;
}

/// Comma-separated table; doubles with 17 significant digits.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

  template <class... T>
  void row(const T&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    if (r.size() != cols_) fail(ErrorKind::InvalidInput, "cli::csv", "row width mismatch");
    row_strings(r);
  }

  const std::string& text() const { return text_; }

 private:
  static std::string cell(double x) { return fmt17(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(bool x) { return x ? "true" : "false"; }
  static std::string cell(const char* s) { return cell(std::string(s)); }
  static std::string cell(std::string_view s) { return cell(std::string(s)); }
  static std::string cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  void row_strings(const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) text_ += (i ? "," : "") + r[i];
    text_ += "\n";
  }

  std::size_t cols_;
  std::string text_;
};

// ---------------------------------------------------------------------------
// SVG

struct SvgLayer {
  std::vector<GammaNet> nets;
  std::vector<Ball> balls;
};

/// One panel per chart: the chart rectangle, net polylines drawn in the
/// chart of their samples, balls as circles of ambient radius measured along
/// the first chart axis.
inline std::string svg_plot(const Manifold& m, const SvgLayer& layer, const std::string& title = "") {
  const double panel = 320.0, pad = 20.0;
  const int nc = static_cast<int>(m.charts().size());
  const double width = nc * (panel + pad) + pad, height = panel + 2 * pad + 20;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 "
    << width << " " << height << "\">\n";
  if (!title.empty()) o << "<text x=\"" << pad << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" << title << "</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  auto sx = [&](int c, const Vec2& x) {
    const ChartInfo& ci = m.charts()[c];
    const double s = panel / std::max(ci.period()[0], ci.period()[1]);
    return Vec2(pad + c * (panel + pad) + (x[0] - ci.lo[0]) * s, 20 + pad + panel - (x[1] - ci.lo[1]) * s);
  };
  auto fmt = [](double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3f", x);
    return std::string(b);
  };
  for (int c = 0; c < nc; ++c) {
    const Vec2 a = sx(c, m.charts()[c].lo), b = sx(c, m.charts()[c].hi);
    o << "<rect x=\"" << fmt(a[0]) << "\" y=\"" << fmt(b[1]) << "\" width=\"" << fmt(b[0] - a[0]) << "\" height=\""
      << fmt(a[1] - b[1]) << "\" fill=\"none\" stroke=\"#888\"/>\n";
  }
  for (std::size_t k = 0; k < layer.nets.size(); ++k) {
    const char* color = colors[k % 6];
    for (const auto& seg : layer.nets[k].segments()) {
      std::string path;
      const ChartPoint* prev = nullptr;
      for (const auto& p : seg.samples) {
        const ChartInfo& ci = m.charts()[p.chart];
        const bool jump = prev && (prev->chart != p.chart || (p.x - prev->x).cwiseAbs().maxCoeff() > 0.25 * ci.period().minCoeff());
        if (jump && !path.empty()) {
          o << "<polyline points=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
          path.clear();
        }
        if (ci.contains(p.x)) {
          const Vec2 s = sx(p.chart, m.wrap(p.chart, p.x));
          path += (path.empty() ? "" : " ") + fmt(s[0]) + "," + fmt(s[1]);
        }
        prev = &p;
      }
      if (!path.empty()) o << "<polyline points=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    }
  }
  for (const Ball& b : layer.balls) {
    const ChartInfo& ci = m.charts()[b.center.chart];
    const double s = panel / std::max(ci.period()[0], ci.period()[1]);
    const double unit = m.ambient_jacobian(b.center.chart, b.center.x).col(0).norm();
    const Vec2 c = sx(b.center.chart, b.center.x);
    o << "<circle cx=\"" << fmt(c[0]) << "\" cy=\"" << fmt(c[1]) << "\" r=\"" << fmt(b.radius / unit * s)
      << "\" fill=\"none\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace geonet::io
