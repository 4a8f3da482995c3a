#pragma once

// Stationary nets as zeros of the length gradient. Each iteration tries a
// Newton step on the reduced Hessian (pseudo-inverse, null directions left
// alone) and accepts it when the defect halves; otherwise it takes an
// Armijo-backtracked steepest-descent step on length. Break points are
// respaced along their edge whenever a segment nears the injectivity bound
// or shrinks against its neighbours.

#include "geonet/net.hpp"

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

namespace geonet {

struct SolverOptions {
  int max_iter = 200;
  double tol_stat = 1e-8;
  std::vector<double> damping{1.0, 0.5, 0.25};
  double newton_cutoff = 1e-6;  // relative eigenvalue below which directions are not stepped
  double max_move = 0.25;       // per-point displacement cap, fraction of inj_radius_lb
  double hessian_step = 1e-5;
  double newton_gate = 1.5;  // Newton is tried below this defect, and every 4th iteration above it
  int stall_window = 25;     // iterations without progress before giving up
};

struct TraceEntry {
  int iteration = 0;
  std::string phase;  // "start", "newton", "descent", "respace"
  double length = 0.0;
  double defect = 0.0;
  double step = 0.0;
};

struct SolveResult {
  GammaNet net;
  std::vector<TraceEntry> trace;
  int iterations = 0;
};

namespace detail {

/// Moves free points by dx (coordinates), capped per point in the g-norm.
inline std::optional<GammaNet> displaced(const GammaNet& net, const VecX& dx, double cap) {
  const Manifold& m = net.manifold();
  VecX d = dx;
  double worst = 0.0;
  for (std::size_t k = 0; k < net.free_points().size(); ++k) {
    const ChartPoint& p = net.points()[net.free_points()[k]];
    worst = std::max(worst, norm(m.metric(p.chart, p.x), Vec2(d.segment<2>(2 * k))));
  }
  if (worst > cap) d *= cap / worst;
  try {
    return net.with_coordinates(net.coordinates() + d, false);
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// Re-records samples of a net realized without them.
inline GammaNet recorded(const GammaNet& net) {
  GammaNet n = net;
  std::vector<char> dirty(n.segments().size(), 0);
  for (std::size_t s = 0; s < dirty.size(); ++s) dirty[s] = n.segments()[s].samples.empty();
  n.realize(&dirty, true);
  return n;
}

/// Point at arc length `at` along an edge's broken geodesic.
inline ChartPoint edge_point_at(const GammaNet& net, int e, double at) {
  const Manifold& m = net.manifold();
  for (int s : net.edge_segments(e)) {
    const auto& seg = net.segments()[s];
    if (at <= seg.length || s == net.edge_segments(e).back())
      return m.canonical(segment_point(m, seg, std::clamp(at / seg.length, 0.0, 1.0)));
    at -= seg.length;
  }
  return net.points()[net.edge_points(e).back()];
}

/// Edges whose break points should be respaced, with the new count.
inline std::map<int, int> respace_plan(const GammaNet& net) {
  const double inj = net.manifold().inj_radius_lb();
  std::map<int, int> plan;
  for (const auto& [id, e] : net.graph().edges()) {
    const auto& segs = net.edge_segments(id);
    const double len = net.edge_length(id);
    const int have = static_cast<int>(segs.size()) - 1;
    const int least = e.is_loop() ? 2 : 0;
    const int need = std::max(least, static_cast<int>(std::ceil(len / (0.5 * inj))) - 1);
    bool redo = have > need && len / (have + 1) < 0.05 * inj;
    for (int s : segs) {
      const double l = net.segments()[s].length;
      if (l > 0.75 * inj) redo = true;
      if (have > 0 && l < 0.1 * len / static_cast<double>(segs.size())) redo = true;
    }
    if (!redo) continue;
    plan[id] = len / (have + 1) < 0.05 * inj ? need : std::max(have, need);
  }
  return plan;
}

inline GammaNet respaced(const GammaNet& net, const std::map<int, int>& plan) {
  auto br = net.all_breaks();
  for (const auto& [id, k] : plan) {
    const double len = net.edge_length(id);
    std::vector<ChartPoint> pts;
    for (int j = 1; j <= k; ++j) pts.push_back(edge_point_at(net, id, len * j / (k + 1)));
    br[id] = pts;
  }
  return GammaNet(net.manifold_ptr(), net.graph(), net.positions(), br, net.pinned());
}

inline void check_collapse(const GammaNet& net, const char* origin) {
  const double floor = 1e-6 * net.manifold().inj_radius_lb();
  for (const auto& [id, e] : net.graph().edges()) {
    if (net.edge_length(id) < floor)
      fail(ErrorKind::EdgeCollapse, origin,
           "edge " + std::to_string(id) + " collapsed to length " + std::to_string(net.edge_length(id)));
  }
}

inline VecX newton_step(const GammaNet& net, const VecX& grad, const SolverOptions& o) {
  const MatX h = fd_hessian(net, o.hessian_step);
  const MatX q = reduced_frame(net);
  const MatX hr = q.transpose() * h * q;
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (hr + hr.transpose()));
  const VecX gr = q.transpose() * grad;
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  VecX y = VecX::Zero(gr.size());
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double l = es.eigenvalues()[k];
    if (std::abs(l) <= o.newton_cutoff * lmax) continue;
    const VecX v = es.eigenvectors().col(k);
    y -= v * (v.dot(gr) / l);
  }
  return q * y;
}

}  // namespace detail

/// Drives max |B| below tol_stat over the free points.
inline SolveResult stationarize(const GammaNet& net0, const SolverOptions& o = {}) {
  const char* origin = "solver::stationarize";
  SolveResult r;
  GammaNet net = net0;
  const double cap = o.max_move * net.manifold().inj_radius_lb();
  if (auto plan = detail::respace_plan(net); !plan.empty()) net = detail::respaced(net, plan);
  double d = max_defect(net);
  r.trace.push_back({0, "start", net_length(net), d, 0.0});
  int it = 0;
  double best = d, best_len = net_length(net);
  int since_best = 0;
  while (d > o.tol_stat) {
    if (it >= o.max_iter)
      fail(ErrorKind::NoConvergence, origin,
           "defect " + std::to_string(d) + " after " + std::to_string(it) + " iterations");
    if (since_best > o.stall_window)
      fail(ErrorKind::NoConvergence, origin, "stalled at defect " + std::to_string(d));
    ++it;
    const VecX grad = length_gradient(net);
    std::optional<GammaNet> next;
    std::string phase;
    double used = 0.0;
    if (grad.size() > 0 && (d < o.newton_gate || it % 4 == 1)) {
      const VecX dx = detail::newton_step(net, grad, o);
      for (double a : o.damping) {
        auto cand = detail::displaced(net, a * dx, cap);
        if (cand && max_defect(*cand) <= 0.5 * d) {
          next = std::move(cand);
          phase = "newton";
          used = a;
          break;
        }
      }
    }
    if (grad.size() > 0) {
      if (!next) {
        // Steepest descent in the reduced frame, Armijo on length.
        const MatX q = detail::reduced_frame(net);
        const VecX dir = -(q * (q.transpose() * grad));
        const double slope = grad.dot(dir);
        const double l0 = net_length(net);
        for (double a = 1.0; a > 1e-12; a *= 0.5) {
          auto cand = detail::displaced(net, a * dir, cap);
          if (cand && net_length(*cand) <= l0 + 1e-4 * a * slope) {
            next = std::move(cand);
            phase = "descent";
            used = a;
            break;
          }
        }
      }
    }
    if (!next) fail(ErrorKind::NoConvergence, origin, "no Newton or descent step reduces the defect or length");
    net = detail::recorded(next->canonicalized());
    detail::check_collapse(net, origin);
    if (auto plan = detail::respace_plan(net); !plan.empty()) {
      net = detail::respaced(net, plan);
      phase += "+respace";
    }
    d = max_defect(net);
    const double len = net_length(net);
    r.trace.push_back({it, phase, len, d, used});
    if (d < 0.9 * best || len < best_len - 1e-9 * (1.0 + best_len)) {
      best = std::min(best, d);
      best_len = std::min(best_len, len);
      since_best = 0;
    } else {
      ++since_best;
    }
  }
  r.net = detail::recorded(net);
  r.iterations = it;
  return r;
}

/// Ball of ambient (chordal) radius around a point.
struct Ball {
  ChartPoint center;
  double radius = 1.0;
};

inline bool in_ball(const Manifold& m, const Ball& b, const ChartPoint& p) {
  return m.ambient_delta(b.center, p).norm() <= b.radius;
}

/// Ambient sample points of a net's image.
inline std::vector<Vec3> image_samples(const GammaNet& net) {
  std::vector<Vec3> out;
  for (const auto& seg : net.segments())
    for (const auto& p : seg.samples) out.push_back(net.manifold().ambient(p));
  return out;
}

/// Symmetric Hausdorff distance between point sets, ambient metric with the
/// manifold's periodic identification.
inline double hausdorff(const Manifold& m, const std::vector<ChartPoint>& a, const std::vector<ChartPoint>& b) {
  auto directed = [&](const std::vector<ChartPoint>& x, const std::vector<ChartPoint>& y) {
    double worst = 0.0;
    for (const auto& p : x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : y) best = std::min(best, m.ambient_delta(p, q).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  return std::max(directed(a, b), directed(b, a));
}

inline std::vector<ChartPoint> net_samples(const GammaNet& net) {
  std::vector<ChartPoint> out;
  for (const auto& seg : net.segments()) out.insert(out.end(), seg.samples.begin(), seg.samples.end());
  return out;
}

/// True when every sample of each image lies within tol of the other
/// image's sample polyline (ambient point-to-chord distance). Exits at the
/// first point that is farther.
inline bool images_within(const GammaNet& a, const GammaNet& b, double tol) {
  const Manifold& m = a.manifold();
  auto directed = [&](const GammaNet& x, const GammaNet& y) {
    for (const auto& sx : x.segments()) {
      for (const auto& p : sx.samples) {
        bool near = false;
        for (const auto& sy : y.segments()) {
          for (std::size_t i = 0; i + 1 < sy.samples.size() && !near; ++i) {
            const Vec3 d0 = m.ambient_delta(p, sy.samples[i]);
            if (d0.norm() > 0.1 * m.inj_radius_lb() + tol) continue;
            const Vec3 d1 = m.ambient_delta(p, sy.samples[i + 1]);
            const Vec3 e = d1 - d0;
            const double t = std::clamp(-d0.dot(e) / std::max(e.squaredNorm(), 1e-300), 0.0, 1.0);
            near = (d0 + t * e).norm() <= tol;
          }
          if (near) break;
        }
        if (!near) return false;
      }
    }
    return true;
  };
  return directed(a, b) && directed(b, a);
}

struct MultistartOptions {
  int seeds = 10;
  std::uint64_t rng_seed = 0;
  std::optional<Ball> region;  // vertices are seeded inside it
  int workers = 1;
  SolverOptions solver;
  double dedup_length = 1e-6;
  double dedup_hausdorff = 1e-4;
};

namespace detail {

/// Per-quadrature-domain bound on √det g for rejection sampling.
struct AreaSampler {
  struct Dom {
    QuadratureDomain d;
    double weight;
    double bound;
  };
  std::vector<Dom> doms;
  double total = 0.0;

  explicit AreaSampler(const Manifold& m) {
    for (const auto& q : m.quadrature()) {
      Vec2 lo = q.lo, hi = q.hi;
      if (q.shape == QuadratureDomain::Shape::Disk) {
        lo = q.center - Vec2::Constant(q.radius);
        hi = q.center + Vec2::Constant(q.radius);
      }
      double bound = 0.0;
      const int n = 24;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          const Vec2 x = lo + Vec2((hi - lo)[0] * i / n, (hi - lo)[1] * j / n);
          bound = std::max(bound, std::sqrt(m.metric(q.chart, x).determinant()));
        }
      bound *= 1.25;
      const double area = (hi - lo).prod() * bound;
      doms.push_back({q, area, bound});
      total += area;
    }
  }

  template <class Rng>
  ChartPoint sample(const Manifold& m, Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int tries = 0; tries < 100000; ++tries) {
      double pick = u(rng) * total;
      const Dom* d = &doms.back();
      for (const auto& x : doms) {
        if (pick < x.weight) {
          d = &x;
          break;
        }
        pick -= x.weight;
      }
      Vec2 x;
      if (d->d.shape == QuadratureDomain::Shape::Disk) {
        x = d->d.center + d->d.radius * Vec2(2 * u(rng) - 1, 2 * u(rng) - 1);
        if ((x - d->d.center).norm() > d->d.radius) continue;
      } else {
        x = d->d.lo + (d->d.hi - d->d.lo).cwiseProduct(Vec2(u(rng), u(rng)));
      }
      if (u(rng) * d->bound <= std::sqrt(m.metric(d->d.chart, x).determinant())) return m.canonical({d->d.chart, x});
    }
    fail(ErrorKind::NoConvergence, "solver::multistart", "area sampling failed");
  }
};

/// Point a fraction s of the way from a to b: along the ambient chord for
/// embedded surfaces, chart-linear otherwise.
inline ChartPoint interpolate(const Manifold& m, const ChartPoint& a, const ChartPoint& b, double s) {
  if (m.has_embedding()) {
    const Vec3 pa = m.ambient(a);
    if (auto p = m.from_ambient(pa + s * m.ambient_delta(a, b))) return m.canonical(*p);
  }
  auto y = m.express(b, a.chart, a.x);
  if (!y) fail(ErrorKind::InvalidInput, "solver::multistart", "cannot interpolate between charts");
  return m.canonical({a.chart, a.x + s * (*y - a.x)});
}

template <class Rng>
GammaNet seed_net(ManifoldPtr mp, const WeightedMultigraph& g, const AreaSampler& sampler,
                  const std::optional<Ball>& region, Rng& rng) {
  const Manifold& m = *mp;
  const double inj = m.inj_radius_lb();
  std::map<int, ChartPoint> pos;
  for (int v : g.vertices()) {
    ChartPoint p = sampler.sample(m, rng);
    for (int tries = 0; region && !in_ball(m, *region, p) && tries < 100000; ++tries) p = sampler.sample(m, rng);
    pos[v] = p;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<int, std::vector<ChartPoint>> br;
  for (const auto& [id, e] : g.edges()) {
    const ChartPoint& a = pos[e.a];
    if (e.is_loop()) {
      // A geodesic ray of random direction and length, closed back to a.
      const double ang = 2 * kPi * u(rng);
      const Mat2 ga = m.metric(a.chart, a.x);
      Vec2 v(std::cos(ang), std::sin(ang));
      v /= norm(ga, v);
      const double len = inj * (1.0 + 3.0 * u(rng));
      const int k = std::max(3, static_cast<int>(std::ceil(len / (0.4 * inj))));
      const auto ray = geodesic_ivp(m, a, v, len, {k * 16, true});
      for (int j = 1; j <= k; ++j) br[id].push_back(m.canonical(ray.samples[j * 16]));
      continue;
    }
    const ChartPoint& b = pos[e.b];
    // Parallel edges are routed through distinct random waypoints.
    int parallel = 0;
    for (const auto& [id2, e2] : g.edges())
      if ((e2.a == e.a && e2.b == e.b) || (e2.a == e.b && e2.b == e.a)) ++parallel;
    std::vector<ChartPoint> legs{a};
    if (parallel > 1) legs.push_back(sampler.sample(m, rng));
    legs.push_back(b);
    for (std::size_t l = 0; l + 1 < legs.size(); ++l) {
      const double chord = m.ambient_delta(legs[l], legs[l + 1]).norm();
      const int k = std::max(0, static_cast<int>(std::ceil(1.6 * chord / (0.4 * inj))) - 1);
      for (int j = 1; j <= k; ++j) br[id].push_back(interpolate(m, legs[l], legs[l + 1], double(j) / (k + 1)));
      if (l + 2 < legs.size()) br[id].push_back(legs[l + 1]);
    }
  }
  return GammaNet(std::move(mp), g, pos, br);
}

inline bool lex_less(const GammaNet& a, const GammaNet& b) {
  const double la = net_length(a), lb = net_length(b);
  if (la != lb) return la < lb;
  const auto& pa = a.points();
  const auto& pb = b.points();
  for (std::size_t i = 0; i < std::min(pa.size(), pb.size()); ++i) {
    if (pa[i].chart != pb[i].chart) return pa[i].chart < pb[i].chart;
    for (int c = 0; c < 2; ++c)
      if (pa[i].x[c] != pb[i].x[c]) return pa[i].x[c] < pb[i].x[c];
  }
  return pa.size() < pb.size();
}

}  // namespace detail

/// Distinct stationary nets over Γ from `seeds` random starts. Seed i uses
/// its own stream derived from (rng_seed, i), so results do not depend on
/// the worker count and a larger seed count extends a smaller one.
inline std::vector<GammaNet> multistart(ManifoldPtr m, const WeightedMultigraph& g, const MultistartOptions& o) {
  const char* origin = "solver::multistart";
  if (!is_good(g)) fail(ErrorKind::InvalidInput, origin, "graph is not good");
  if (o.seeds < 1) fail(ErrorKind::InvalidInput, origin, "seeds must be at least 1");
  const detail::AreaSampler sampler(*m);
  std::vector<std::optional<GammaNet>> found(o.seeds);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next++; i < o.seeds; i = next++) {
      std::seed_seq seq{static_cast<std::uint32_t>(o.rng_seed), static_cast<std::uint32_t>(o.rng_seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      try {
        const GammaNet seed = detail::seed_net(m, g, sampler, o.region, rng);
        auto res = stationarize(seed, o.solver);
        if (max_defect(res.net) <= o.solver.tol_stat) found[i] = std::move(res.net);
      } catch (const Error&) {
      }
    }
  };
  const int nw = std::max(1, std::min(o.workers, o.seeds));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<GammaNet> out;
  for (auto& f : found) {
    if (!f) continue;
    const double len = net_length(*f);
    bool dup = false;
    for (std::size_t k = 0; k < out.size() && !dup; ++k)
      dup = std::abs(net_length(out[k]) - len) <= o.dedup_length * std::max(1.0, len) &&
            images_within(*f, out[k], o.dedup_hausdorff);
    if (!dup) out.push_back(std::move(*f));
  }
  std::sort(out.begin(), out.end(), detail::lex_less);
  return out;
}

}  // namespace geonet
