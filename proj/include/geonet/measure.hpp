#pragma once

// Quadrature on the atlas: volume integrals, curve lengths and line
// integrals, and the sampled distance d_g(g1, g2) = sup |g1(v,v) - g2(v,v)| / g(v,v)
// between two metric fields.

#include "geonet/geodesic.hpp"

#include <functional>
#include <vector>

namespace geonet {

using ScalarField = std::function<double(const ChartPoint&)>;

/// Gauss–Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

/// ∫_M f dv_g by tensor-product quadrature over the atlas' quadrature
/// domains: Gauss–Legendre on bounded directions, the trapezoid rule on
/// periodic ones, polar coordinates on disks.
inline double volume_integral(const Manifold& m, const ScalarField& f, int resolution = 64) {
  const char* origin = "riemann::volume_integral";
  if (m.quadrature().empty()) fail(ErrorKind::InvalidInput, origin, "charts do not cover M (no quadrature domains)");
  std::vector<double> gx, gw;
  gauss_legendre(resolution, gx, gw);
  auto volume_element = [&](int chart, const Vec2& x) { return std::sqrt(m.metric(chart, x).determinant()); };
  double total = 0.0;
  for (const auto& dom : m.quadrature()) {
    const ChartInfo& ci = m.charts()[dom.chart];
    if (dom.shape == QuadratureDomain::Shape::Disk) {
      const int nt = 2 * resolution;
      const double dt = 2 * kPi / nt;
      for (int i = 0; i < resolution; ++i) {
        const double r = 0.5 * dom.radius * (gx[i] + 1.0);
        const double wr = 0.5 * dom.radius * gw[i];
        for (int k = 0; k < nt; ++k) {
          const double th = k * dt;
          const Vec2 x = dom.center + r * Vec2(std::cos(th), std::sin(th));
          total += wr * dt * r * f({dom.chart, x}) * volume_element(dom.chart, x);
        }
      }
      continue;
    }
    std::array<std::vector<double>, 2> nodes, weights;
    for (int d = 0; d < 2; ++d) {
      const double a = dom.lo[d], b = dom.hi[d];
      const bool periodic = ci.periodic[d] && std::abs((b - a) - (ci.hi[d] - ci.lo[d])) < 1e-12 * (b - a);
      if (periodic) {
        const int n = 2 * resolution;
        for (int k = 0; k < n; ++k) {
          nodes[d].push_back(a + (b - a) * k / n);
          weights[d].push_back((b - a) / n);
        }
      } else {
        for (int k = 0; k < resolution; ++k) {
          nodes[d].push_back(a + 0.5 * (b - a) * (gx[k] + 1.0));
          weights[d].push_back(0.5 * (b - a) * gw[k]);
        }
      }
    }
    for (std::size_t i = 0; i < nodes[0].size(); ++i) {
      for (std::size_t j = 0; j < nodes[1].size(); ++j) {
        const Vec2 x(nodes[0][i], nodes[1][j]);
        total += weights[0][i] * weights[1][j] * f({dom.chart, x}) * volume_element(dom.chart, x);
      }
    }
  }
  return total;
}

inline double volume(const Manifold& m, int resolution = 64) {
  return volume_integral(m, [](const ChartPoint&) { return 1.0; }, resolution);
}

/// Length of the chart-linear interpolation of a polyline (4-point
/// Gauss–Legendre per piece). Consecutive points in different charts are
/// joined in the chart of the first.
inline double polyline_length(const Manifold& m, const std::vector<ChartPoint>& pts) {
  static const double xs[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double ws[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const ChartPoint& a = pts[i];
    auto b = m.express(pts[i + 1], a.chart, a.x);
    if (!b) fail(ErrorKind::OutsideDomain, "riemann::polyline_length", "consecutive samples share no chart");
    const Vec2 d = *b - a.x;
    for (int k = 0; k < 4; ++k) {
      const Vec2 x = a.x + 0.5 * (xs[k] + 1.0) * d;
      total += 0.5 * ws[k] * norm(m.metric(a.chart, x), d);
    }
  }
  return total;
}

/// ∫_seg f dl_g by composite Simpson over the recorded samples.
inline double segment_integral(const Manifold& m, const GeodesicSegment& seg, const ScalarField& f) {
  (void)m;
  const std::size_t n = seg.samples.size();
  if (n < 3 || (n - 1) % 2 != 0) fail(ErrorKind::InvalidInput, "riemann::segment_integral", "need an even number of sample intervals");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(seg.samples[i]) * (i == 0 || i == n - 1 ? 1.0 : (i % 2 ? 4.0 : 2.0));
  return seg.length * s / (3.0 * static_cast<double>(n - 1));
}

struct MetricDistance {
  double value = 0.0;  // sampled lower estimate of the supremum
  ChartPoint argmax;
  int grid = 0;            // samples per dimension per quadrature domain
  std::size_t points = 0;  // grid points evaluated
};

namespace detail {

/// sup over v ≠ 0 of |v^T (g1 - g2) v| / v^T g v, a generalized eigenvalue.
inline double pointwise_ratio(const Mat2& g, const Mat2& g1, const Mat2& g2) {
  const Mat2 l = g.llt().matrixL();
  const Mat2 linv = l.inverse();
  const Mat2 a = linv * (g1 - g2) * linv.transpose();
  const double tr = 0.5 * (a(0, 0) + a(1, 1));
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a(0, 0) - a(1, 1)) * (a(0, 0) - a(1, 1)) + a(0, 1) * a(1, 0)));
  return std::max(std::abs(tr + disc), std::abs(tr - disc));
}

inline void check_compatible(const Manifold& a, const Manifold& b, const char* origin) {
  if (a.charts().size() != b.charts().size()) fail(ErrorKind::InvalidInput, origin, "incompatible atlases");
  for (std::size_t i = 0; i < a.charts().size(); ++i) {
    if ((a.charts()[i].lo - b.charts()[i].lo).norm() > 1e-12 || (a.charts()[i].hi - b.charts()[i].hi).norm() > 1e-12)
      fail(ErrorKind::InvalidInput, origin, "incompatible atlases");
  }
}

}  // namespace detail

/// d_gref(g1, g2): uniform grid over the quadrature domains, exact sup over
/// directions at each point, then compass-search refinement of the best
/// grid points.
inline MetricDistance metric_distance(const Manifold& gref, const Manifold& g1, const Manifold& g2, int grid = 64) {
  const char* origin = "riemann::metric_distance";
  detail::check_compatible(gref, g1, origin);
  detail::check_compatible(gref, g2, origin);
  MetricDistance out;
  out.grid = grid;
  auto ratio = [&](int chart, const Vec2& x) {
    return detail::pointwise_ratio(gref.metric(chart, x), g1.metric(chart, x), g2.metric(chart, x));
  };
  struct Cand {
    double v;
    int chart;
    Vec2 x;
    double h;
  };
  std::vector<Cand> best;
  auto consider = [&](int chart, const Vec2& x, double h) {
    ++out.points;
    const double v = ratio(chart, x);
    best.push_back({v, chart, x, h});
    std::sort(best.begin(), best.end(), [](const Cand& a, const Cand& b) { return a.v > b.v; });
    if (best.size() > 4) best.pop_back();
  };
  for (const auto& dom : gref.quadrature()) {
    Vec2 lo = dom.lo, hi = dom.hi;
    if (dom.shape == QuadratureDomain::Shape::Disk) {
      lo = dom.center - Vec2::Constant(dom.radius);
      hi = dom.center + Vec2::Constant(dom.radius);
    }
    const double h = std::max(hi[0] - lo[0], hi[1] - lo[1]) / grid;
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        const Vec2 x(lo[0] + (i + 0.5) * (hi[0] - lo[0]) / grid, lo[1] + (j + 0.5) * (hi[1] - lo[1]) / grid);
        if (dom.shape == QuadratureDomain::Shape::Disk && (x - dom.center).norm() > dom.radius) continue;
        consider(dom.chart, x, h);
      }
    }
  }
  if (best.empty()) return out;
  out.value = best.front().v;
  out.argmax = {best.front().chart, best.front().x};
  for (Cand c : best) {
    double step = c.h;
    while (step > 1e-12) {
      bool moved = false;
      for (const Vec2& d : {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1)}) {
        const Vec2 y = c.x + step * d;
        if (!gref.in_domain(c.chart, y)) continue;
        const double v = ratio(c.chart, y);
        if (v > c.v) {
          c.v = v;
          c.x = y;
          moved = true;
          break;
        }
      }
      if (!moved) step *= 0.5;
    }
    if (c.v > out.value) {
      out.value = c.v;
      out.argmax = {c.chart, c.x};
    }
  }
  return out;
}

}  // namespace geonet
