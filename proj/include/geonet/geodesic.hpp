#pragma once

// Geodesic initial- and boundary-value problems and parallel transport.
//
// Integration is classical fixed-step RK4 on (x, v) in the current chart,
// hopping to the manifold's preferred chart between steps. A fixed step
// count makes every quantity a smooth function of the inputs, which the
// finite-difference Hessian of the net module relies on.

#include "geonet/manifold.hpp"

#include <span>
#include <vector>

namespace geonet {

inline constexpr int kSegmentSteps = 128;

struct GeodesicSegment {
  ChartPoint start;
  Vec2 v0 = Vec2::Zero();  // initial velocity, unit parameter interval
  /// End point in the chart of the requested target (periodic image
  /// consistent with the start), and the velocity there in that chart.
  ChartPoint end;
  Vec2 v_end = Vec2::Zero();
  double length = 0.0;
  double duration = 1.0;  // parameter interval [0, duration]
  int steps = kSegmentSteps;
  std::vector<ChartPoint> samples;  // steps + 1 points, uniform in the parameter
  std::vector<Vec2> velocities;     // per sample, in the sample's chart
  Mat2 shoot_jacobian = Mat2::Identity();  // d(end)/d(v0), for warm starts

  /// Unit inward tangent at the start, in start.chart coordinates.
  Vec2 start_tangent(const Manifold& m) const { return v0 / norm(m.metric(start.chart, start.x), v0); }
  /// Unit inward tangent at the end (pointing back along the segment).
  Vec2 end_tangent(const Manifold& m) const { return -v_end / norm(m.metric(end.chart, end.x), v_end); }
};

namespace detail {

struct Carry {
  ChartPoint p;
  Vec2 v;
  std::vector<Vec2> w;  // vectors parallel-transported along
};

inline void geodesic_rhs(const Manifold& m, int chart, const Vec2& x, const Vec2& v, std::span<const Vec2> w,
                         Vec2& dx, Vec2& dv, std::span<Vec2> dw) {
  const Christoffel c = m.christoffel(chart, x);
  dx = v;
  dv = -c.contract(v, v);
  for (std::size_t i = 0; i < w.size(); ++i) dw[i] = -c.contract(v, w[i]);
}

inline void hop(const Manifold& m, Carry& s) {
  const int c = m.preferred_chart(s.p.chart, s.p.x);
  if (c == s.p.chart) return;
  auto y = m.transition(s.p.chart, c, s.p.x);
  if (!y) return;
  const Mat2 j = m.transition_jacobian(s.p.chart, c, s.p.x);
  s.v = j * s.v;
  for (auto& w : s.w) w = j * w;
  s.p = {c, *y};
}

/// Integrates from state s over parameter length T in `steps` RK4 steps.
inline void integrate(const Manifold& m, Carry& s, double T, int steps, std::vector<ChartPoint>* samples,
                      std::vector<Vec2>* velocities, const char* origin) {
  const double h = T / steps;
  const std::size_t nw = s.w.size();
  std::vector<Vec2> w1(nw), w2(nw), w3(nw), w4(nw), wt(nw);
  if (samples) {
    samples->clear();
    samples->reserve(steps + 1);
    samples->push_back(s.p);
  }
  if (velocities) {
    velocities->clear();
    velocities->reserve(steps + 1);
    velocities->push_back(s.v);
  }
  for (int n = 0; n < steps; ++n) {
    hop(m, s);
    const int c = s.p.chart;
    const Vec2 x = s.p.x;
    Vec2 x1, v1, x2, v2, x3, v3, x4, v4;
    geodesic_rhs(m, c, x, s.v, s.w, x1, v1, w1);
    for (std::size_t i = 0; i < nw; ++i) wt[i] = s.w[i] + 0.5 * h * w1[i];
    geodesic_rhs(m, c, x + 0.5 * h * x1, s.v + 0.5 * h * v1, wt, x2, v2, w2);
    for (std::size_t i = 0; i < nw; ++i) wt[i] = s.w[i] + 0.5 * h * w2[i];
    geodesic_rhs(m, c, x + 0.5 * h * x2, s.v + 0.5 * h * v2, wt, x3, v3, w3);
    for (std::size_t i = 0; i < nw; ++i) wt[i] = s.w[i] + h * w3[i];
    geodesic_rhs(m, c, x + h * x3, s.v + h * v3, wt, x4, v4, w4);
    s.p.x = x + h / 6.0 * (x1 + 2 * x2 + 2 * x3 + x4);
    s.v = s.v + h / 6.0 * (v1 + 2 * v2 + 2 * v3 + v4);
    for (std::size_t i = 0; i < nw; ++i) s.w[i] += h / 6.0 * (w1[i] + 2 * w2[i] + 2 * w3[i] + w4[i]);
    if (!std::isfinite(s.p.x[0]) || !std::isfinite(s.p.x[1]) || !std::isfinite(s.v[0]) || !std::isfinite(s.v[1]))
      fail(ErrorKind::StepUnderflow, origin, "integration blew up");
    if (!m.in_domain(c, s.p.x)) fail(ErrorKind::OutsideDomain, origin, "trajectory exits the atlas");
    if (samples) samples->push_back(s.p);
    if (velocities) velocities->push_back(s.v);
  }
}

/// Express a tangent vector at p in another chart.
inline Vec2 push_vector(const Manifold& m, const ChartPoint& p, int chart, const Vec2& v) {
  if (p.chart == chart) return v;
  return m.transition_jacobian(p.chart, chart, p.x) * v;
}

}  // namespace detail

struct IvpOptions {
  int steps = 0;  // 0: kSegmentSteps per unit length, at least kSegmentSteps
  bool record = true;
};

/// Geodesic through x0 with velocity v0 on the parameter interval [0, T].
inline GeodesicSegment geodesic_ivp(const Manifold& m, const ChartPoint& x0, const Vec2& v0, double T,
                                    IvpOptions opts = {}) {
  const char* origin = "riemann::geodesic_ivp";
  const Mat2 g0 = m.checked_metric(x0.chart, x0.x);
  const double speed = norm(g0, v0);
  if (!(speed > 0)) fail(ErrorKind::InvalidInput, origin, "initial velocity must be non-zero");
  if (!(T > 0)) fail(ErrorKind::InvalidInput, origin, "time must be positive");
  GeodesicSegment seg;
  seg.start = x0;
  seg.v0 = v0;
  seg.duration = T;
  seg.length = T * speed;
  seg.steps = opts.steps > 0 ? opts.steps
                             : std::max(kSegmentSteps, static_cast<int>(std::ceil(kSegmentSteps * seg.length)));
  detail::Carry s{x0, v0, {}};
  detail::integrate(m, s, T, seg.steps, opts.record ? &seg.samples : nullptr,
                    opts.record ? &seg.velocities : nullptr, origin);
  seg.end = s.p;
  seg.v_end = s.v;
  return seg;
}

struct BvpOptions {
  int steps = 0;  // 0: chosen from the estimated length
  int max_iter = 60;
  double tol = 1e-12;  // residual in target-chart coordinates, relative to 1 + |target|
  bool record = true;
  bool enforce_inj = true;
  bool polish = true;  // extra chord steps below tol while the residual keeps shrinking
  const GeodesicSegment* warm = nullptr;  // previous solution for nearby endpoints
};

namespace detail {

/// Shooting guess: for embedded surfaces the tangential projection of the
/// chord (exact direction on round spheres), otherwise the chart-linear
/// direction; the magnitude is the length of the chart-linear path.
inline Vec2 initial_guess(const Manifold& m, const ChartPoint& p, const ChartPoint& q, double chord) {
  const Mat2 gp = m.metric(p.chart, p.x);
  auto y = m.express(q, p.chart, p.x);
  Vec2 v;
  double mag = chord;
  if (y) {
    v = *y - p.x;
    double len = 0.0;
    const int n = 16;
    for (int i = 0; i < n; ++i) {
      const Vec2 x = p.x + (i + 0.5) / n * v;
      len += norm(m.metric(p.chart, x), v) / n;
    }
    if (std::isfinite(len) && len > 0) mag = std::max(chord, len);
  }
  if (m.has_embedding() || !y) {
    const Mat32 ja = m.ambient_jacobian(p.chart, p.x);
    const Vec3 d = m.ambient_delta(p, q);
    v = (ja.transpose() * ja).ldlt().solve(ja.transpose() * d);
    mag = chord * (1.0 + chord * chord / 24.0);
  }
  const double s = norm(gp, v);
  if (s > 0) v *= mag / s;
  return v;
}

/// RK4 step count for a segment of estimated length len: the length error
/// of the discrete flow grows like len^5 / steps^4, so the count doubles in
/// a few bands. Flat charts are integrated exactly.
inline int bvp_steps(const Manifold& m, double len) {
  if (m.flat()) return kSegmentSteps;
  if (len < 0.8) return kSegmentSteps;
  if (len < 1.6) return 2 * kSegmentSteps;
  if (len < 2.6) return 4 * kSegmentSteps;
  return 8 * kSegmentSteps;
}

}  // namespace detail

/// The short geodesic from p to q: shooting on the initial velocity with a
/// damped chord-Newton iteration.
inline GeodesicSegment geodesic_bvp(const Manifold& m, const ChartPoint& p, const ChartPoint& q, BvpOptions opts = {}) {
  const char* origin = "riemann::geodesic_bvp";
  const Mat2 gp = m.checked_metric(p.chart, p.x);
  m.checked_metric(q.chart, q.x);
  const double chord = m.ambient_delta(p, q).norm();
  if (!(chord > 1e-13)) fail(ErrorKind::DegenerateEdge, origin, "endpoints coincide (p = q)");

  // Target: q in its own chart, or the periodic image nearest p when the
  // charts agree.
  const int tchart = q.chart;
  Vec2 target = q.x;
  if (q.chart == p.chart) target = *m.express(q, p.chart, p.x);
  const double scale = 1.0 + target.norm();

  Vec2 v;
  Mat2 jac;
  bool have_jac = false;
  if (opts.warm && opts.warm->end.chart == tchart && opts.warm->start.chart == p.chart) {
    const GeodesicSegment& w = *opts.warm;
    jac = w.shoot_jacobian;
    have_jac = true;
    v = w.v0 + jac.lu().solve(target - w.end.x);
  } else {
    v = detail::initial_guess(m, p, q, chord);
  }
  const int steps = opts.steps > 0 ? opts.steps : detail::bvp_steps(m, norm(gp, v));

  const double vmax = 4.0 * m.inj_radius_lb();
  auto shoot = [&](const Vec2& vel, ChartPoint& end, Vec2& vend) -> std::optional<Vec2> {
    if (!(norm(gp, vel) < vmax)) return std::nullopt;
    try {
      detail::Carry s{p, vel, {}};
      detail::integrate(m, s, 1.0, steps, nullptr, nullptr, origin);
      auto e = m.express(s.p, tchart, target);
      if (!e) return std::nullopt;
      vend = detail::push_vector(m, s.p, tchart, s.v);
      end = {tchart, *e};
      return Vec2(*e - target);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  auto fd_jacobian = [&](const Vec2& vel, const Vec2& r0) -> std::optional<Mat2> {
    Mat2 j;
    const double h = 1e-7 * std::max(vel.norm(), 1e-6);
    for (int c = 0; c < 2; ++c) {
      Vec2 e = Vec2::Zero();
      e[c] = h;
      ChartPoint end;
      Vec2 ve;
      auto r = shoot(vel + e, end, ve);
      if (!r) return std::nullopt;
      j.col(c) = (*r - r0) / h;
    }
    return j;
  };

  ChartPoint end;
  Vec2 vend;
  auto r = shoot(v, end, vend);
  if (!r) fail(ErrorKind::NoConvergence, origin, "initial shot left the atlas");
  bool converged = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    const double rn = r->norm();
    if (rn <= opts.tol * scale) {
      converged = true;
      break;
    }
    if (!have_jac) {
      auto j = fd_jacobian(v, *r);
      if (!j) break;
      jac = *j;
      have_jac = true;
    }
    Vec2 step = -jac.lu().solve(*r);
    if (!step.allFinite()) break;
    const double cap = 0.5 * (norm(gp, v) + chord);
    if (norm(gp, step) > cap) step *= cap / norm(gp, step);
    bool accepted = false;
    double alpha = 1.0;
    for (int k = 0; k < 16; ++k, alpha *= 0.5) {
      ChartPoint e2;
      Vec2 ve2;
      auto r2 = shoot(v + alpha * step, e2, ve2);
      if (r2 && r2->norm() < (1.0 - 0.25 * alpha) * rn) {
        // Refresh the chord Jacobian whenever the contraction is poor.
        if (r2->norm() > 0.1 * rn) have_jac = false;
        v += alpha * step;
        r = r2;
        end = e2;
        vend = ve2;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (have_jac && alpha < 1.0) {
        // Retry once with a fresh Jacobian before giving up.
        have_jac = false;
        auto j = fd_jacobian(v, *r);
        if (!j) break;
        jac = *j;
        have_jac = true;
        const Vec2 s2 = -jac.lu().solve(*r);
        ChartPoint e2;
        Vec2 ve2;
        auto r2 = shoot(v + s2, e2, ve2);
        if (r2 && r2->norm() < rn) {
          v += s2;
          r = r2;
          end = e2;
          vend = ve2;
          continue;
        }
      }
      // Stagnation at the rounding floor of finite-difference Christoffels.
      converged = rn <= 100.0 * opts.tol * scale;
      break;
    }
  }
  if (!converged) fail(ErrorKind::NoConvergence, origin, "shooting did not converge");
  if (opts.polish && have_jac) {
    for (int k = 0; k < 2 && r->norm() > 0; ++k) {
      const Vec2 st = -jac.lu().solve(*r);
      ChartPoint e2;
      Vec2 ve2;
      auto r2 = shoot(v + st, e2, ve2);
      if (!r2 || !(r2->norm() < r->norm())) break;
      v += st;
      r = r2;
      end = e2;
      vend = ve2;
    }
  }
  if (!have_jac) {
    if (auto j = fd_jacobian(v, *r)) jac = *j;
  }

  GeodesicSegment seg;
  seg.start = p;
  seg.v0 = v;
  seg.steps = steps;
  seg.length = norm(gp, v);
  seg.shoot_jacobian = jac;
  if (opts.enforce_inj && seg.length >= m.inj_radius_lb())
    fail(ErrorKind::OutsideUniqueness, origin,
         "geodesic length " + std::to_string(seg.length) + " >= injectivity radius bound " +
             std::to_string(m.inj_radius_lb()));
  if (opts.record) {
    detail::Carry s{p, v, {}};
    detail::integrate(m, s, 1.0, steps, &seg.samples, &seg.velocities, origin);
  }
  seg.end = end;
  seg.v_end = vend;
  return seg;
}

/// Parallel transport of w (tangent at seg.start) to seg.end, expressed in
/// seg.end's chart.
inline Vec2 parallel_transport(const Manifold& m, const GeodesicSegment& seg, const Vec2& w) {
  detail::Carry s{seg.start, seg.v0, {w}};
  detail::integrate(m, s, seg.duration, seg.steps, nullptr, nullptr, "riemann::parallel_transport");
  return detail::push_vector(m, s.p, seg.end.chart, s.w[0]);
}

/// The same geodesic traversed from end to start.
inline GeodesicSegment reversed(const Manifold& m, const GeodesicSegment& seg) {
  IvpOptions o;
  o.steps = seg.steps;
  GeodesicSegment r = geodesic_ivp(m, seg.end, -seg.v_end, seg.duration, o);
  r.end = seg.start;
  r.v_end = -seg.v0;
  return r;
}

/// Length of the recorded samples by composite Simpson on |γ'|_g (falls back
/// to the trapezoid rule for an odd number of intervals).
inline double sampled_length(const Manifold& m, const GeodesicSegment& seg) {
  const std::size_t n = seg.samples.size();
  if (n < 2) return seg.length;
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i)
    speed[i] = norm(m.metric(seg.samples[i].chart, seg.samples[i].x), seg.velocities[i]);
  const double h = seg.duration / static_cast<double>(n - 1);
  double s = 0.0;
  if ((n - 1) % 2 == 0) {
    for (std::size_t i = 0; i < n; ++i) s += speed[i] * (i == 0 || i == n - 1 ? 1.0 : (i % 2 ? 4.0 : 2.0));
    return s * h / 3.0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) s += 0.5 * (speed[i] + speed[i + 1]);
  return s * h;
}

/// Point at parameter τ ∈ [0, 1] of the segment, by re-integration.
inline ChartPoint segment_point(const Manifold& m, const GeodesicSegment& seg, double tau) {
  if (tau <= 0) return seg.start;
  if (tau >= 1) return seg.end;
  detail::Carry s{seg.start, seg.v0, {}};
  const int steps = std::max(8, static_cast<int>(std::ceil(seg.steps * tau)));
  detail::integrate(m, s, tau * seg.duration, steps, nullptr, nullptr, "riemann::segment_point");
  return m.canonical(s.p);
}

}  // namespace geonet
