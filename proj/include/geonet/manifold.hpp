#pragma once

// Chart-atlas presentation of a Riemannian surface.
//
// A Manifold owns a list of coordinate charts, the metric field on each chart,
// transition maps between charts and a user-supplied lower bound on the
// injectivity radius. Built-ins: flat torus (one periodic chart), round sphere
// and triaxial ellipsoid (two stereographic charts related by inversion), and
// custom atlases whose metric entries are expression strings.
//
// Every Manifold is immutable after construction and may be shared freely.

#include "geonet/core.hpp"
#include "geonet/expr.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace geonet {

enum class Builtin { FlatTorus, RoundSphere, Ellipsoid, Custom };

inline std::string_view to_string(Builtin b) {
  switch (b) {
    case Builtin::FlatTorus: return "flat_torus";
    case Builtin::RoundSphere: return "round_sphere";
    case Builtin::Ellipsoid: return "ellipsoid";
    case Builtin::Custom: return "custom";
  }
  return "custom";
}

struct ChartInfo {
  Vec2 lo{-1.0, -1.0};
  Vec2 hi{1.0, 1.0};
  std::array<bool, 2> periodic{false, false};

  Vec2 period() const { return hi - lo; }
  bool contains(const Vec2& x) const {
    for (int i = 0; i < 2; ++i) {
      if (periodic[i]) continue;
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    }
    return true;
  }
};

/// Region of one chart used by volume quadrature. The regions of an atlas
/// partition the manifold up to measure zero.
struct QuadratureDomain {
  enum class Shape { Box, Disk };
  Shape shape = Shape::Box;
  int chart = 0;
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual Builtin builtin() const = 0;
  /// Metric matrix g(x) in the given chart; no domain or definiteness checks.
  virtual Mat2 metric(int chart, const Vec2& x) const = 0;

  /// Levi-Civita connection; central differences of the metric unless a
  /// subclass knows a closed form.
  virtual Christoffel christoffel(int chart, const Vec2& x) const { return fd_christoffel(chart, x); }

  /// Transition map; nullopt if x is not in the overlap of the two charts.
  virtual std::optional<Vec2> transition(int from, int to, const Vec2& x) const {
    if (from == to) return x;
    return std::nullopt;
  }
  virtual Mat2 transition_jacobian(int from, int to, const Vec2& x) const {
    if (from == to) return Mat2::Identity();
    const double h = 1e-6 * (1.0 + x.norm());
    Mat2 j;
    for (int c = 0; c < 2; ++c) {
      Vec2 e = Vec2::Zero();
      e[c] = h;
      auto p = transition(from, to, x + e);
      auto m = transition(from, to, x - e);
      if (!p || !m) fail(ErrorKind::OutsideDomain, "riemann::transition", "jacobian outside overlap");
      j.col(c) = (*p - *m) / (2 * h);
    }
    return j;
  }

  /// Chart in which computation near (chart, x) should continue. Integrators
  /// hop to it between steps.
  virtual int preferred_chart(int chart, const Vec2& x) const {
    (void)x;
    return chart;
  }

  virtual bool has_embedding() const { return false; }
  /// Vanishing Christoffel symbols in every chart.
  virtual bool flat() const { return false; }
  /// Point in R^3: the embedding for surfaces in space, chart coordinates
  /// (z = 0) otherwise.
  virtual Vec3 ambient(const ChartPoint& p) const {
    Vec2 x = p.x;
    if (p.chart != 0) {
      if (auto y = transition(p.chart, 0, p.x)) x = *y;
    }
    x = wrap(0, x);
    return {x[0], x[1], 0.0};
  }
  virtual Mat32 ambient_jacobian(int chart, const Vec2& x) const {
    const double h = 1e-6 * (1.0 + x.norm());
    Mat32 j;
    for (int c = 0; c < 2; ++c) {
      Vec2 e = Vec2::Zero();
      e[c] = h;
      j.col(c) = ambient_delta({chart, x - e}, {chart, x + e}) / (2 * h);
    }
    return j;
  }
  /// Displacement from p to q in R^3, using the nearest periodic image.
  virtual Vec3 ambient_delta(const ChartPoint& p, const ChartPoint& q) const {
    if (auto y = express(q, p.chart, p.x)) {
      const Vec2 d = *y - p.x;
      return {d[0], d[1], 0.0};
    }
    return ambient(q) - ambient(p);
  }
  /// Inverse of ambient() for built-ins; nullopt where unsupported.
  virtual std::optional<ChartPoint> from_ambient(const Vec3& a) const {
    ChartPoint p{0, Vec2(a[0], a[1])};
    if (!charts_[0].contains(wrap(0, p.x))) return std::nullopt;
    return canonical(p);
  }

  const std::vector<ChartInfo>& charts() const { return charts_; }
  double inj_radius_lb() const { return inj_radius_lb_; }
  const std::vector<QuadratureDomain>& quadrature() const { return quadrature_; }

  bool in_domain(int chart, const Vec2& x) const {
    return chart >= 0 && chart < static_cast<int>(charts_.size()) && charts_[chart].contains(x);
  }

  /// Wrap periodic coordinates into the fundamental box.
  Vec2 wrap(int chart, Vec2 x) const {
    const ChartInfo& c = charts_[chart];
    for (int i = 0; i < 2; ++i) {
      if (!c.periodic[i]) continue;
      const double per = c.hi[i] - c.lo[i];
      x[i] = c.lo[i] + std::fmod(x[i] - c.lo[i], per);
      if (x[i] < c.lo[i]) x[i] += per;
      if (x[i] >= c.hi[i]) x[i] -= per;
    }
    return x;
  }

  /// Wrapped coordinates in the preferred chart.
  ChartPoint canonical(const ChartPoint& p) const {
    const int c = preferred_chart(p.chart, p.x);
    if (c != p.chart) {
      if (auto y = transition(p.chart, c, p.x)) return {c, wrap(c, *y)};
    }
    return {p.chart, wrap(p.chart, p.x)};
  }

  /// Coordinates of q in `chart`, choosing the periodic image nearest `near`.
  std::optional<Vec2> express(const ChartPoint& q, int chart, const Vec2& near) const {
    Vec2 y = q.x;
    if (q.chart != chart) {
      auto t = transition(q.chart, chart, q.x);
      if (!t) return std::nullopt;
      y = *t;
    }
    const ChartInfo& c = charts_[chart];
    for (int i = 0; i < 2; ++i) {
      if (!c.periodic[i]) continue;
      const double per = c.hi[i] - c.lo[i];
      y[i] -= per * std::round((y[i] - near[i]) / per);
    }
    return y;
  }

  /// Metric with domain and positive-definiteness checks.
  Mat2 checked_metric(int chart, const Vec2& x) const {
    if (!in_domain(chart, x)) {
      fail(ErrorKind::OutsideDomain, "riemann::evaluate_geometry",
           "point (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ") outside chart " +
               std::to_string(chart));
    }
    Mat2 g = metric(chart, x);
    const double det = g.determinant();
    if (!(g(0, 0) > 0.0 && det > 0.0) || std::abs(g(0, 1) - g(1, 0)) > 1e-12 * g.norm()) {
      fail(ErrorKind::NotPositiveDefinite, "riemann::evaluate_geometry",
           "metric at (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ") in chart " +
               std::to_string(chart));
    }
    return g;
  }

  /// Christoffel symbols by central differences with step 1e-5 (1 + |x|).
  Christoffel fd_christoffel(int chart, const Vec2& x) const {
    const double h = 1e-5 * (1.0 + x.norm());
    std::array<Mat2, 2> dg;  // dg[l] = ∂_l g
    for (int l = 0; l < 2; ++l) {
      Vec2 e = Vec2::Zero();
      e[l] = h;
      dg[l] = (metric(chart, x + e) - metric(chart, x - e)) / (2 * h);
    }
    const Mat2 ginv = metric(chart, x).inverse();
    Christoffel c;
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
          double s = 0.0;
          for (int l = 0; l < 2; ++l) s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
          c.gamma[k](i, j) = 0.5 * s;
          c.gamma[k](j, i) = 0.5 * s;
        }
      }
    }
    return c;
  }

 protected:
  std::vector<ChartInfo> charts_;
  std::vector<QuadratureDomain> quadrature_;
  double inj_radius_lb_ = 1.0;
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

/// Metric matrix, its inverse and the Christoffel symbols at a point.
struct GeometryAt {
  Mat2 metric;
  Mat2 inverse;
  Christoffel christoffel;
};

inline GeometryAt evaluate_geometry(const Manifold& m, int chart, const Vec2& x) {
  GeometryAt out;
  out.metric = m.checked_metric(chart, x);
  out.inverse = out.metric.inverse();
  out.christoffel = m.christoffel(chart, x);
  return out;
}

// ---------------------------------------------------------------------------

class FlatTorus final : public Manifold {
 public:
  FlatTorus(double a, double b) : a_(a), b_(b) {
    if (!(a > 0 && b > 0)) fail(ErrorKind::InvalidInput, "riemann::flat_torus", "side lengths must be positive");
    ChartInfo c;
    c.lo = Vec2(0, 0);
    c.hi = Vec2(a, b);
    c.periodic = {true, true};
    charts_ = {c};
    QuadratureDomain q;
    q.shape = QuadratureDomain::Shape::Box;
    q.lo = c.lo;
    q.hi = c.hi;
    quadrature_ = {q};
    inj_radius_lb_ = 0.5 * std::min(a, b);
  }

  Builtin builtin() const override { return Builtin::FlatTorus; }
  Mat2 metric(int, const Vec2&) const override { return Mat2::Identity(); }
  Christoffel christoffel(int, const Vec2&) const override { return {}; }
  Vec3 ambient(const ChartPoint& p) const override {
    const Vec2 x = wrap(0, p.x);
    return {x[0], x[1], 0.0};
  }
  bool flat() const override { return true; }
  Mat32 ambient_jacobian(int, const Vec2&) const override {
    Mat32 j = Mat32::Zero();
    j(0, 0) = j(1, 1) = 1.0;
    return j;
  }
  Vec3 ambient_delta(const ChartPoint& p, const ChartPoint& q) const override {
    const Vec2 d = *express(q, 0, p.x) - p.x;
    return {d[0], d[1], 0.0};
  }
  std::optional<ChartPoint> from_ambient(const Vec3& a) const override {
    return ChartPoint{0, wrap(0, Vec2(a[0], a[1]))};
  }

  double a() const { return a_; }
  double b() const { return b_; }

 private:
  double a_, b_;
};

/// Surfaces parametrized by the two stereographic charts of the unit sphere
/// composed with the linear map diag(a, b, c). Chart 0 is centred at the
/// north pole, chart 1 at the south pole; the transition is x -> x/|x|^2.
class StereographicSurface : public Manifold {
 public:
  Vec3 axes() const { return axes_; }

  std::optional<Vec2> transition(int from, int to, const Vec2& x) const override {
    if (from == to) return x;
    const double r2 = x.squaredNorm();
    if (r2 < 1e-300) return std::nullopt;
    return Vec2(x / r2);
  }
  Mat2 transition_jacobian(int from, int to, const Vec2& x) const override {
    if (from == to) return Mat2::Identity();
    const double r2 = x.squaredNorm();
    return (Mat2::Identity() * r2 - 2.0 * x * x.transpose()) / (r2 * r2);
  }
  int preferred_chart(int chart, const Vec2& x) const override {
    return x.squaredNorm() > 1.25 * 1.25 ? 1 - chart : chart;
  }

  bool has_embedding() const override { return true; }

  /// Point of the unit sphere for chart coordinates.
  static Vec3 sphere_point(int chart, const Vec2& x) {
    const double r2 = x.squaredNorm();
    const double q = 1.0 + r2;
    const double z = (1.0 - r2) / q;
    return {2.0 * x[0] / q, 2.0 * x[1] / q, chart == 0 ? z : -z};
  }
  static Mat32 sphere_jacobian(int chart, const Vec2& x) {
    const double q = 1.0 + x.squaredNorm();
    Mat32 j;
    for (int b = 0; b < 2; ++b) {
      for (int a = 0; a < 2; ++a) j(a, b) = (a == b ? 2.0 / q : 0.0) - 4.0 * x[a] * x[b] / (q * q);
      j(2, b) = (chart == 0 ? -4.0 : 4.0) * x[b] / (q * q);
    }
    return j;
  }

  Vec3 ambient(const ChartPoint& p) const override {
    return axes_.cwiseProduct(sphere_point(p.chart, p.x));
  }
  Mat32 ambient_jacobian(int chart, const Vec2& x) const override {
    return axes_.asDiagonal() * sphere_jacobian(chart, x);
  }
  Vec3 ambient_delta(const ChartPoint& p, const ChartPoint& q) const override {
    return ambient(q) - ambient(p);
  }
  std::optional<ChartPoint> from_ambient(const Vec3& a) const override {
    Vec3 s = a.cwiseQuotient(axes_);
    const double n = s.norm();
    if (n < 1e-300) return std::nullopt;
    s /= n;
    if (s[2] >= 0) return ChartPoint{0, Vec2(s[0], s[1]) / (1.0 + s[2])};
    return ChartPoint{1, Vec2(s[0], s[1]) / (1.0 - s[2])};
  }

 protected:
  explicit StereographicSurface(Vec3 axes) : axes_(std::move(axes)) {
    ChartInfo c;
    c.lo = Vec2(-50, -50);
    c.hi = Vec2(50, 50);
    charts_ = {c, c};
    for (int k = 0; k < 2; ++k) {
      QuadratureDomain q;
      q.shape = QuadratureDomain::Shape::Disk;
      q.chart = k;
      q.radius = 1.0;
      quadrature_.push_back(q);
    }
  }

  Vec3 axes_;
};

class RoundSphere final : public StereographicSurface {
 public:
  /// inj_lb <= 0 selects the exact injectivity radius π r.
  explicit RoundSphere(double radius = 1.0, double inj_lb = 0.0)
      : StereographicSurface(Vec3::Constant(radius)), r_(radius) {
    if (!(radius > 0)) fail(ErrorKind::InvalidInput, "riemann::round_sphere", "radius must be positive");
    inj_radius_lb_ = inj_lb > 0 ? inj_lb : kPi * radius;
  }
  Builtin builtin() const override { return Builtin::RoundSphere; }
  double radius() const { return r_; }

  Mat2 metric(int, const Vec2& x) const override {
    const double q = 1.0 + x.squaredNorm();
    return Mat2::Identity() * (4.0 * r_ * r_ / (q * q));
  }
  // Conformal factor e^{2σ}, σ = log(2r/(1+|x|^2)).
  Christoffel christoffel(int, const Vec2& x) const override {
    const Vec2 ds = -2.0 * x / (1.0 + x.squaredNorm());
    Christoffel c;
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          c.gamma[k](i, j) = (k == i ? ds[j] : 0.0) + (k == j ? ds[i] : 0.0) - (i == j ? ds[k] : 0.0);
    return c;
  }

 private:
  double r_;
};

class Ellipsoid final : public StereographicSurface {
 public:
  /// inj_lb <= 0 selects min(π/sqrt(K_max), half the shortest principal
  /// ellipse perimeter).
  Ellipsoid(double a, double b, double c, double inj_lb = 0.0) : StereographicSurface(Vec3(a, b, c)) {
    if (!(a > 0 && b > 0 && c > 0)) fail(ErrorKind::InvalidInput, "riemann::ellipsoid", "axes must be positive");
    if (inj_lb > 0) {
      inj_radius_lb_ = inj_lb;
    } else {
      const double kmax = std::max({a * a / (b * b * c * c), b * b / (a * a * c * c), c * c / (a * a * b * b)});
      auto perimeter = [](double p, double q) {  // Ramanujan
        const double h = (p - q) * (p - q) / ((p + q) * (p + q));
        return kPi * (p + q) * (1 + 3 * h / (10 + std::sqrt(4 - 3 * h)));
      };
      const double lmin = std::min({perimeter(a, b), perimeter(b, c), perimeter(a, c)});
      inj_radius_lb_ = std::min(kPi / std::sqrt(kmax), 0.5 * lmin);
    }
  }
  Builtin builtin() const override { return Builtin::Ellipsoid; }

  Mat2 metric(int chart, const Vec2& x) const override {
    const Mat32 j = ambient_jacobian(chart, x);
    return j.transpose() * j;
  }
};

// ---------------------------------------------------------------------------

/// Atlas given by expression strings.
struct CustomChartSpec {
  ChartInfo info;
  std::string g11, g12, g22;
};
struct CustomTransitionSpec {
  int from = 0, to = 1;
  std::string y1, y2;
};
struct CustomManifoldSpec {
  std::vector<CustomChartSpec> charts;
  std::vector<CustomTransitionSpec> transitions;
  std::vector<QuadratureDomain> quadrature;  // empty: one box per chart
  double inj_radius_lb = 0.0;
};

class CustomManifold final : public Manifold {
 public:
  explicit CustomManifold(const CustomManifoldSpec& spec) : spec_(spec) {
    const char* origin = "riemann::custom_manifold";
    if (spec.charts.empty()) fail(ErrorKind::InvalidInput, origin, "no charts");
    if (!(spec.inj_radius_lb > 0)) fail(ErrorKind::InvalidInput, origin, "inj_radius_lb must be positive");
    for (const auto& c : spec.charts) {
      charts_.push_back(c.info);
      entries_.push_back({Expression::parse(c.g11), Expression::parse(c.g12), Expression::parse(c.g22)});
    }
    const int n = static_cast<int>(charts_.size());
    if (n > 1) {
      for (const auto& c : charts_) {
        if (c.periodic[0] || c.periodic[1])
          fail(ErrorKind::InvalidInput, origin, "periodic coordinates require a single-chart atlas");
      }
    }
    for (const auto& t : spec.transitions) {
      if (t.from < 0 || t.from >= n || t.to < 0 || t.to >= n || t.from == t.to)
        fail(ErrorKind::InvalidInput, origin, "transition references unknown chart");
      transitions_.push_back({t.from, t.to, Expression::parse(t.y1), Expression::parse(t.y2)});
    }
    quadrature_ = spec.quadrature;
    if (quadrature_.empty()) {
      for (int k = 0; k < n; ++k) {
        QuadratureDomain q;
        q.chart = k;
        q.lo = charts_[k].lo;
        q.hi = charts_[k].hi;
        quadrature_.push_back(q);
      }
    }
    for (const auto& q : quadrature_) {
      if (q.chart < 0 || q.chart >= n) fail(ErrorKind::InvalidInput, origin, "quadrature domain references unknown chart");
    }
    inj_radius_lb_ = spec.inj_radius_lb;
  }

  Builtin builtin() const override { return Builtin::Custom; }
  const CustomManifoldSpec& spec() const { return spec_; }

  Mat2 metric(int chart, const Vec2& x) const override {
    const auto& e = entries_[chart];
    const double off = e[1](x);
    Mat2 g;
    g << e[0](x), off, off, e[2](x);
    return g;
  }

  std::optional<Vec2> transition(int from, int to, const Vec2& x) const override {
    if (from == to) return x;
    for (const auto& t : transitions_) {
      if (t.from == from && t.to == to) {
        const Vec2 y(t.y1(x), t.y2(x));
        if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || !charts_[to].contains(y)) return std::nullopt;
        return y;
      }
    }
    return std::nullopt;
  }

  // Hop once a point is within 10% of the box edge and another chart holds it
  // further inside.
  int preferred_chart(int chart, const Vec2& x) const override {
    auto margin = [&](int c, const Vec2& y) {
      const ChartInfo& ci = charts_[c];
      double m = 1.0;
      for (int i = 0; i < 2; ++i) {
        if (ci.periodic[i]) continue;
        const double w = ci.hi[i] - ci.lo[i];
        m = std::min(m, std::min(y[i] - ci.lo[i], ci.hi[i] - y[i]) / w);
      }
      return m;
    };
    const double here = margin(chart, x);
    if (here > 0.1) return chart;
    int best = chart;
    double best_margin = here;
    for (int c = 0; c < static_cast<int>(charts_.size()); ++c) {
      if (c == chart) continue;
      if (auto y = transition(chart, c, x)) {
        const double m = margin(c, *y);
        if (m > best_margin) {
          best = c;
          best_margin = m;
        }
      }
    }
    return best;
  }

 private:
  struct Transition {
    int from, to;
    Expression y1, y2;
  };
  CustomManifoldSpec spec_;
  std::vector<std::array<Expression, 3>> entries_;
  std::vector<Transition> transitions_;
};

// ---------------------------------------------------------------------------

/// Non-negative bump supported in the ambient ball B_r(center):
/// φ = amplitude · exp(1 - 1/(1 - d²/r²)), so φ(center) = amplitude.
/// The Constant and Zero kinds are test families (φ ≡ amplitude, φ ≡ 0).
struct Bump {
  enum class Kind { Smooth, Constant, Zero };
  Kind kind = Kind::Smooth;
  ChartPoint center;
  double radius = 1.0;
  double amplitude = 1.0;

  double value(const Manifold& m, const ChartPoint& p) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::Constant: return amplitude;
      case Kind::Smooth: break;
    }
    const double s = m.ambient_delta(center, p).squaredNorm() / (radius * radius);
    if (s >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - s));
  }

  /// Chart gradient of φ.
  Vec2 gradient(const Manifold& m, int chart, const Vec2& x) const {
    if (kind != Kind::Smooth) return Vec2::Zero();
    const ChartPoint p{chart, x};
    const Vec3 d = m.ambient_delta(center, p);
    const double s = d.squaredNorm() / (radius * radius);
    if (s >= 1.0) return Vec2::Zero();
    const double phi = amplitude * std::exp(1.0 - 1.0 / (1.0 - s));
    const double dphi_ds = -phi / ((1.0 - s) * (1.0 - s));
    return dphi_ds * (2.0 / (radius * radius)) * (m.ambient_jacobian(chart, x).transpose() * d);
  }

  bool contains(const Manifold& m, const ChartPoint& p) const {
    if (kind != Kind::Smooth) return kind == Kind::Constant;
    return m.ambient_delta(center, p).norm() < radius;
  }
};

/// The metric (1 + tφ) g₀ presented on the atlas of g₀.
class ConformalManifold final : public Manifold {
 public:
  ConformalManifold(ManifoldPtr base, Bump bump, double t) : base_(std::move(base)), bump_(bump), t_(t) {
    charts_ = base_->charts();
    quadrature_ = base_->quadrature();
    inj_radius_lb_ = base_->inj_radius_lb();
    if (bump_.kind == Bump::Kind::Constant) inj_radius_lb_ *= std::sqrt(1.0 + t_ * bump_.amplitude);
  }

  Builtin builtin() const override { return base_->builtin(); }
  const Manifold& base() const { return *base_; }
  const ManifoldPtr& base_ptr() const { return base_; }
  double t() const { return t_; }
  const Bump& bump() const { return bump_; }

  double factor(int chart, const Vec2& x) const { return 1.0 + t_ * bump_.value(*base_, {chart, x}); }

  Mat2 metric(int chart, const Vec2& x) const override { return factor(chart, x) * base_->metric(chart, x); }

  // Γ_t = Γ₀ + ½(δ^k_i ∂_j w + δ^k_j ∂_i w − g₀_ij g₀^{kl} ∂_l w), w = log(1 + tφ).
  Christoffel christoffel(int chart, const Vec2& x) const override {
    Christoffel c = base_->christoffel(chart, x);
    if (t_ == 0.0 || bump_.kind != Bump::Kind::Smooth) return c;
    const Vec2 dw = t_ * bump_.gradient(*base_, chart, x) / factor(chart, x);
    if (dw.squaredNorm() == 0.0) return c;
    const Mat2 g0 = base_->metric(chart, x);
    const Vec2 up = g0.inverse() * dw;
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          c.gamma[k](i, j) += 0.5 * ((k == i ? dw[j] : 0.0) + (k == j ? dw[i] : 0.0) - g0(i, j) * up[k]);
    return c;
  }

  std::optional<Vec2> transition(int from, int to, const Vec2& x) const override {
    return base_->transition(from, to, x);
  }
  Mat2 transition_jacobian(int from, int to, const Vec2& x) const override {
    return base_->transition_jacobian(from, to, x);
  }
  int preferred_chart(int chart, const Vec2& x) const override { return base_->preferred_chart(chart, x); }
  bool has_embedding() const override { return base_->has_embedding(); }
  Vec3 ambient(const ChartPoint& p) const override { return base_->ambient(p); }
  Mat32 ambient_jacobian(int chart, const Vec2& x) const override { return base_->ambient_jacobian(chart, x); }
  Vec3 ambient_delta(const ChartPoint& p, const ChartPoint& q) const override { return base_->ambient_delta(p, q); }
  std::optional<ChartPoint> from_ambient(const Vec3& a) const override { return base_->from_ambient(a); }

 private:
  ManifoldPtr base_;
  Bump bump_;
  double t_;
};

/// One-parameter conformal family t ↦ (1 + tφ) g₀ on [0, t_max].
class MetricFamily {
 public:
  MetricFamily(ManifoldPtr base, Bump bump, double t_max) : base_(std::move(base)), bump_(bump), t_max_(t_max) {
    const char* origin = "riemann::metric_family";
    if (!(t_max >= 0)) fail(ErrorKind::InvalidInput, origin, "parameter range must be [0, t_max] with t_max >= 0");
    if (bump.amplitude < 0) fail(ErrorKind::InvalidInput, origin, "bump must be non-negative");
    if (bump.kind == Bump::Kind::Smooth && !(bump.radius > 0 && bump.amplitude > 0))
      fail(ErrorKind::InvalidInput, origin, "bump needs positive radius and φ(x₀) > 0");
  }

  const ManifoldPtr& base() const { return base_; }
  const Bump& bump() const { return bump_; }
  double t_max() const { return t_max_; }

  ManifoldPtr at(double t) const {
    if (t < 0 || t > t_max_ * (1 + 1e-12)) fail(ErrorKind::InvalidInput, "riemann::metric_family", "t outside [0, t_max]");
    return std::make_shared<ConformalManifold>(base_, bump_, t);
  }

 private:
  ManifoldPtr base_;
  Bump bump_;
  double t_max_;
};

inline ManifoldPtr make_flat_torus(double a = 2 * kPi, double b = 2 * kPi) {
  return std::make_shared<FlatTorus>(a, b);
}
inline ManifoldPtr make_round_sphere(double r = 1.0, double inj_lb = 0.0) {
  return std::make_shared<RoundSphere>(r, inj_lb);
}
inline ManifoldPtr make_ellipsoid(double a, double b, double c, double inj_lb = 0.0) {
  return std::make_shared<Ellipsoid>(a, b, c, inj_lb);
}

/// Scales a metric by a constant: metric c·g on the same atlas.
inline ManifoldPtr scaled(const ManifoldPtr& m, double c) {
  Bump b;
  b.kind = Bump::Kind::Constant;
  b.amplitude = 1.0;
  return std::make_shared<ConformalManifold>(m, b, c - 1.0);
}

}  // namespace geonet
