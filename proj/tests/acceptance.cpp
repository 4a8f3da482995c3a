// Acceptance run: one PASS/FAIL line per criterion, with the measured
// quantities and the wall time against its budget. Exit status 1 if any
// criterion fails.

#include "geonet/geonet.hpp"
#include "oracles.hpp"
#include "surgery_suite.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace geonet;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED[" << what << "]";
    }
  }
};

std::string sci(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2e", x);
  return b;
}

// ---------------------------------------------------------------------------
// Oracles

// Euclidean Fermat point: grid search, then compass refinement on the norm
// of the distance-sum gradient.
Vec2 fermat_point(const std::array<Vec2, 3>& p) {
  auto f = [&](const Vec2& x) { return (x - p[0]).norm() + (x - p[1]).norm() + (x - p[2]).norm(); };
  auto grad = [&](const Vec2& x) {
    return ((x - p[0]).normalized() + (x - p[1]).normalized() + (x - p[2]).normalized()).norm();
  };
  const Vec2 lo = p[0].cwiseMin(p[1]).cwiseMin(p[2]), hi = p[0].cwiseMax(p[1]).cwiseMax(p[2]);
  Vec2 best = lo;
  const int n = 400;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const Vec2 x = lo + Vec2((hi - lo)[0] * i / n, (hi - lo)[1] * j / n);
      if (f(x) < f(best)) best = x;
    }
  for (double step = (hi - lo).maxCoeff() / n; step > 1e-16;) {
    bool moved = false;
    for (const Vec2& d : {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1), Vec2(1, 1), Vec2(-1, -1), Vec2(1, -1), Vec2(-1, 1)})
      if (grad(best + step * d) < grad(best)) {
        best += step * d;
        moved = true;
      }
    if (!moved) step *= 0.5;
  }
  return best;
}

std::vector<double> lattice_spectrum(double lmax) {
  std::vector<double> out;
  const int n = static_cast<int>(lmax / (2 * kPi)) + 1;
  for (int p = -n; p <= n; ++p)
    for (int q = -n; q <= n; ++q) {
      const double l = 2 * kPi * std::hypot(p, q);
      if ((p || q) && l <= lmax) out.push_back(l);
    }
  return out;
}

VecX fd_gradient(const GammaNet& net, double h) {
  const VecX x = net.coordinates();
  VecX g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    VecX xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (net_length(net.with_coordinates(xp, false)) - net_length(net.with_coordinates(xm, false))) / (2 * h);
  }
  return g;
}

// Chart-linear polyline length by composite Simpson, 32 panels per piece.
double simpson_length(const Manifold& m, const std::vector<ChartPoint>& pts) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i].x, d = *m.express(pts[i + 1], pts[i].chart, a) - a;
    const int n = 32;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
      total += w * norm(m.metric(pts[i].chart, a + d * (double(k) / n)), d) / (3.0 * n);
    }
  }
  return total;
}

GammaNet tripod(ManifoldPtr m, const std::array<Vec2, 3>& p, const Vec2& center) {
  WeightedMultigraph g;
  for (int v = 0; v < 4; ++v) g.add_vertex(v);
  for (int i = 0; i < 3; ++i) g.add_edge(3, i, 1);
  std::map<int, ChartPoint> pos;
  for (int i = 0; i < 3; ++i) pos[i] = {0, p[i]};
  pos[3] = {0, center};
  return GammaNet(m, g, pos, {}, {0, 1, 2});
}

bool round_trips(const GammaNet& net) {
  const std::string text = io::net_to_text(net);
  const auto back = io::net_from_json(io::json::parse(text), net.manifold_ptr());
  if (io::net_to_text(back.net) != text) return false;
  for (std::size_t i = 0; i < net.points().size(); ++i)
    if (back.net.points()[i].chart != net.points()[i].chart || back.net.points()[i].x != net.points()[i].x) return false;
  return true;
}

// Nets emitted along the run, re-checked by criterion 10.
std::vector<GammaNet> g_emitted;

// ---------------------------------------------------------------------------

void c1(Outcome& o) {
  auto s = make_round_sphere();
  const auto theta = theta_net(s);
  const double d = max_defect(theta), l = net_length(theta);
  o.check(d < 1e-8, "theta defect");
  o.check(std::abs(l - 3 * kPi) < 1e-6, "theta length");
  auto t = make_flat_torus();
  const std::array<Vec2, 3> p{Vec2(1.0, 1.0), Vec2(2.6, 1.3), Vec2(1.7, 2.5)};
  const auto r = stationarize(tripod(t, p, Vec2(1.5, 1.4)));
  const Vec2 c = r.net.position(3).x;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec2 a = (p[i] - c).normalized(), b = (p[(i + 1) % 3] - c).normalized();
    worst = std::max(worst, std::abs(std::acos(a.dot(b)) * 180 / kPi - 120.0));
  }
  const double off = (c - fermat_point(p)).norm();
  o.check(worst < 1e-5, "tripod angles");
  o.check(off < 1e-6, "tripod vs Fermat oracle");
  o.detail << "theta defect " << sci(d) << ", |L-3pi| " << sci(std::abs(l - 3 * kPi)) << "; tripod angle err " << sci(worst)
           << " deg, oracle dist " << sci(off);
  g_emitted.push_back(theta);
  g_emitted.push_back(r.net);
}

void c2(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 0.03);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<ManifoldPtr> spaces{make_flat_torus(), make_round_sphere(), make_ellipsoid(1.0, 1.3, 0.8)};
  double worst_fd = 0.0, worst_id = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto& m = spaces[k % 3];
    GammaNet net = m->has_embedding()
                       ? theta_net(m, random_rotation(rng), 2, {0.0, 1.5 + 1.0 * u(rng), 3.5 + 1.0 * u(rng)})
                       : torus_loop(m, 1 + static_cast<int>(2 * u(rng)), static_cast<int>(2 * u(rng)), Vec2(6 * u(rng), 6 * u(rng)), 5);
    VecX x = net.coordinates();
    for (int i = 0; i < x.size(); ++i) x[i] += nd(rng);
    net = net.with_coordinates(x);
    const VecX g = length_gradient(net), fd = fd_gradient(net, 1e-6);
    worst_fd = std::max(worst_fd, (g - fd).norm() / g.norm());
    const auto defects = balancing_defect(net);
    for (std::size_t i = 0; i < net.free_points().size(); ++i) {
      const auto& p = net.points()[net.free_points()[i]];
      const Vec2 lowered = m->metric(p.chart, p.x) * defects[net.free_points()[i]].b;
      worst_id = std::max(worst_id, (g.segment<2>(2 * i) + lowered).norm());
    }
  }
  o.check(worst_fd < 1e-4, "gradient vs FD");
  o.check(worst_id < 1e-6, "gradient vs lowered defect");
  o.detail << "100 nets; max rel FD err " << sci(worst_fd) << ", max |grad + B_flat| " << sci(worst_id);
}

void c3(Outcome& o) {
  const Tolerances tol;
  const auto torus = torus_loop(make_flat_torus(), 1, 0, Vec2(0.5, 2.0), 5);
  const auto equator = great_circle_net(make_round_sphere(), Vec3(0, 0, 1), Vec3(1, 0, 0), 6);
  const auto ell = great_circle_net(make_ellipsoid(1.0, 1.2, 1.5), Vec3(0, 0, 1), Vec3(1, 0, 0), 8);
  ClassifyOptions a, b;
  b.hessian_step = 0.5 * a.hessian_step;
  const auto rt = hessian_and_classify(torus, a), re = hessian_and_classify(equator, a), rl = hessian_and_classify(ell, a);
  o.check(rt.classification == Classification::Nondegenerate, "torus loop");
  o.check(re.classification == Classification::Degenerate, "sphere equator");
  o.check(rl.classification == Classification::Nondegenerate, "ellipsoid equator");
  double min_res = std::numeric_limits<double>::infinity();
  for (double r : re.parallel_residuals) min_res = std::min(min_res, r);
  o.check(!re.parallel_residuals.empty() && min_res > 10 * tol.par, "equator residual");
  o.check(hessian_and_classify(torus, b).classification == rt.classification &&
              hessian_and_classify(equator, b).classification == re.classification &&
              hessian_and_classify(ell, b).classification == rl.classification,
          "stable under halved step");
  o.detail << "torus " << to_string(rt.classification) << ", equator " << to_string(re.classification) << " (min residual "
           << sci(min_res) << "), ellipsoid " << to_string(rl.classification) << "; stable at h/2";
}

std::vector<suite::Case> g_cases;
std::vector<RegularizeResult> g_results;

void c4(Outcome& o) {
  const Tolerances tol;
  g_cases = suite::cases();
  double worst_len = 0.0, worst_h = 0.0, min_margin = std::numeric_limits<double>::infinity();
  int worst_mult = 0;
  for (const auto& c : g_cases) {
    g_results.push_back(regularize(c.net));
    const GammaNet& out = g_results.back().net;
    const double l_in = net_length(c.net);
    const double rel = std::abs(net_length(out) - l_in) / l_in;
    const double h = oracle::hausdorff(c.net, out);
    const double margin = oracle::embedding_margin(out);
    const int mm = oracle::multiplicity_mismatch(c.net, out);
    worst_len = std::max(worst_len, rel);
    worst_h = std::max(worst_h, h);
    min_margin = std::min(min_margin, margin);
    worst_mult = std::max(worst_mult, mm);
    o.check(oracle::all_components_good(out), c.name + ": good");
    o.check(margin > tol.geo, c.name + ": embedded");
    o.check(rel < 1e-8, c.name + ": length");
    o.check(h < tol.geo, c.name + ": hausdorff");
    o.check(mm == 0, c.name + ": multiplicities");
    o.check(static_cast<int>(out.graph().vertices().size()) == c.vertices &&
                static_cast<int>(out.graph().edges().size()) == c.edges && std::abs(net_length(out) - c.length) < 1e-8,
            c.name + ": counts");
    g_emitted.push_back(out);
  }
  const auto& two = g_results.front().net;
  o.detail << g_cases.size() << " inputs; max rel length err " << sci(worst_len) << ", max Hausdorff " << sci(worst_h)
           << ", min margin " << sci(min_margin) << ", mult mismatch " << worst_mult << "; two circles -> "
           << two.graph().vertices().size() << "V " << two.graph().edges().size() << "E, |L-4pi| "
           << sci(std::abs(net_length(two) - 4 * kPi));
}

void c5(Outcome& o) {
  if (g_results.size() != g_cases.size() || g_cases.empty()) {
    o.check(false, "criterion 4 did not produce results");
    return;
  }
  int steps = 0;
  for (std::size_t i = 0; i < g_cases.size(); ++i) {
    const auto again = regularize(g_results[i].net);
    o.check(oracle::equivalent(g_results[i].net, again.net, 1e-9), g_cases[i].name + ": idempotent");
    o.check(oracle::counters_decrease(g_results[i].log), g_cases[i].name + ": counters");
    steps += static_cast<int>(g_results[i].log.steps.size());
  }
  o.detail << g_cases.size() << " inputs idempotent to 1e-9; " << steps << " logged steps, counters strictly decreasing";
}

void c6(Outcome& o) {
  auto s = make_round_sphere();
  const auto theta = theta_net(s);
  ContinuationOptions report;
  report.on_degenerate = OnDegenerate::Report;
  MetricFamily fam(s, Bump{Bump::Kind::Smooth, ray_point(*s, {1, 0, 0}), 0.5, 1.0}, 0.1);
  const auto r = continue_net(theta, fam, uniform_grid(0.1, 20), report);
  o.check(r.points.size() == 21, "21 emitted nets");
  double worst_def = 0.0, worst_pos = 0.0;
  for (const auto& p : r.points) {
    worst_def = std::max(worst_def, p.report.max_defect);
    const auto fresh = stationarize(theta.with_manifold(fam.at(p.t))).net;
    for (int v : theta.graph().vertices())
      worst_pos = std::max(worst_pos, s->ambient_delta(p.net.position(v), fresh.position(v)).norm());
    worst_pos = std::max(worst_pos, oracle::hausdorff(p.net, fresh));
  }
  o.check(worst_def < 1e-8, "defect");
  o.check(worst_pos < 1e-6, "from-scratch match");
  if (!r.points.empty()) g_emitted.push_back(r.points.back().net);

  double fixed = 0.0;
  const ChartPoint away = ray_point(*s, {std::cos(kPi / 3), std::sin(kPi / 3), 0});
  for (const Bump& b : {Bump{Bump::Kind::Zero, {}, 1.0, 0.0}, Bump{Bump::Kind::Smooth, away, 0.3, 1.0}}) {
    const auto rr = continue_net(theta, MetricFamily(s, b, 0.5), uniform_grid(0.5, 5), report);
    for (const auto& p : rr.points)
      for (std::size_t i = 0; i < theta.points().size(); ++i)
        fixed = std::max(fixed, s->ambient_delta(theta.points()[i], p.net.points()[i]).norm());
  }
  o.check(fixed < 1e-10, "trivial families fix the net");

  auto e = make_ellipsoid(1.0, 1.3, 0.8);
  const auto loop = great_circle_net(e, {0, 0, 1}, {1, 0, 0}, 12);
  const auto rc = continue_net(loop, MetricFamily(e, Bump{Bump::Kind::Constant, {}, 1.0, 1.0}, 1.0), uniform_grid(1.0, 4));
  double scale = 0.0;
  for (const auto& p : rc.points) scale = std::max(scale, std::abs(p.report.length - std::sqrt(1 + p.t) * net_length(loop)));
  o.check(!rc.halted && rc.points.size() == 5 && scale < 1e-9, "constant factor");
  o.detail << "21 nets, max defect " << sci(worst_def) << ", max from-scratch gap " << sci(worst_pos)
           << "; trivial families move " << sci(fixed) << "; sqrt(1+t) err " << sci(scale);
}

void c7(Outcome& o) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<ManifoldPtr> spaces{make_round_sphere(), make_ellipsoid(1.0, 1.3, 0.8), make_flat_torus()};
  std::vector<std::vector<std::vector<ChartPoint>>> curves;
  for (std::size_t i = 0; i < spaces.size(); ++i) curves.push_back(random_geodesic_segments(spaces[i], 1000, 500 + i));
  int violations = 0, oracle_violations = 0;
  double s_err = 0.0, len_err = 0.0;
  for (int b = 0; b < 20; ++b) {
    const std::size_t k = b % spaces.size();
    const auto& m = spaces[k];
    const detail::AreaSampler sampler(*m);
    const Bump bump{Bump::Kind::Smooth, sampler.sample(*m, rng), 0.3 + 0.7 * u(rng), 1.0};
    const double t = 0.05 + 0.95 * u(rng);
    const auto g1 = MetricFamily(m, bump, 1.0).at(t);
    const auto rep = lipschitz_check(*g1, *m, curves[k]);
    violations += static_cast<int>(rep.violations.size());
    // Peak of the conformal factor is exactly t at the bump center.
    s_err = std::max(s_err, std::abs(rep.s - t));
    for (std::size_t i = 0; i < curves[k].size(); i += 25) {
      const double l1 = simpson_length(*g1, curves[k][i]), l2 = simpson_length(*m, curves[k][i]);
      len_err = std::max({len_err, std::abs(l1 - rep.rows[i].l1), std::abs(l2 - rep.rows[i].l2)});
      if (l1 - l2 > (std::sqrt(1 + t) - 1) * l2 + 1e-6) ++oracle_violations;
    }
  }
  o.check(violations == 0, "violations");
  o.check(oracle_violations == 0, "oracle violations");
  o.check(s_err < 1e-6, "sampled sup");
  double tight = 0.0;
  for (double c : {0.01, 0.5, 3.0}) {
    const auto rep = lipschitz_check(*scaled(spaces[1], 1 + c), *spaces[1], curves[1]);
    tight = std::max({tight, std::abs(rep.min_slack), std::abs(rep.max_slack)});
  }
  o.check(tight < 1e-9, "constant-factor tightness");
  o.detail << "20 bumps x 1000 segments: " << violations << " violations (oracle " << oracle_violations << "), |s - t| "
           << sci(s_err) << ", quadrature gap " << sci(len_err) << "; constant-factor |slack| " << sci(tight);
}

void c8(Outcome& o) {
  auto e = make_ellipsoid(1.0, 1.3, 0.8);
  const auto cst = equidistribution_ratio({great_circle_net(e, {0, 0, 1}, {1, 0, 0}, 12)}, [](const ChartPoint&) { return 2.5; });
  o.check(cst.gap <= 1e-12, "constant field");
  auto t = make_flat_torus();
  const auto odd = equidistribution_ratio({torus_loop(t, 1, 0), torus_loop(t, 0, 1)},
                                          [](const ChartPoint& p) { return std::sin(p.x[0]) * std::sin(p.x[1]); });
  o.check(odd.gap <= 1e-8, "odd symmetry");
  auto s = make_round_sphere();
  const Bump b{Bump::Kind::Smooth, ray_point(*s, Vec3(0, 0.6, 0.8)), 1.0, 1.0};
  auto f = [&](const ChartPoint& p) { return b.value(*s, p); };
  auto table = [&] {
    io::Csv csv({"k", "mean_gap", "min_gap", "max_gap"});
    for (const auto& r : rotated_theta_trend(s, f, {1, 2, 4, 8, 16}, 8, 3)) csv.row(r.k, r.mean_gap, r.min_gap, r.max_gap);
    return csv.text();
  };
  const std::string first = table(), second = table();
  o.check(first == second, "trend deterministic");
  const auto rows = rotated_theta_trend(s, f, {1, 16}, 8, 3);
  o.detail << "constant gap " << sci(cst.gap) << ", odd gap " << sci(odd.gap) << "; trend mean gap k=1 " << sci(rows[0].mean_gap)
           << " -> k=16 " << sci(rows[1].mean_gap) << " (byte-identical reruns)";
}

void c9(Outcome& o) {
  auto t = make_flat_torus();
  WeightedMultigraph g;
  g.add_vertex(0);
  g.add_edge(0, 0, 1);
  MultistartOptions mo;
  mo.seeds = 200;
  mo.rng_seed = 9;
  mo.workers = 4;
  const auto nets = multistart(t, g, mo);
  const auto spec = lattice_spectrum(20.0);
  double worst = 0.0;
  for (const auto& n : nets) {
    double best = std::numeric_limits<double>::infinity();
    for (double l : spec) best = std::min(best, std::abs(l - net_length(n)));
    worst = std::max(worst, best);
    g_emitted.push_back(n);
  }
  o.check(!nets.empty(), "found nets");
  o.check(worst < 1e-5, "lattice spectrum");
  o.detail << nets.size() << " distinct loops from 200 seeds; max distance to lattice spectrum " << sci(worst);
}

void c10(Outcome& o) {
  auto t = make_flat_torus();
  WeightedMultigraph g;
  g.add_vertex(0);
  g.add_edge(0, 0, 1);
  auto report = [&](int workers) {
    MultistartOptions mo;
    mo.seeds = 40;
    mo.rng_seed = 123;
    mo.workers = workers;
    io::Csv csv({"index", "length", "text"});
    const auto nets = multistart(t, g, mo);
    for (std::size_t i = 0; i < nets.size(); ++i) csv.row(i, net_length(nets[i]), io::net_to_text(nets[i]));
    return csv.text();
  };
  const std::string a = report(1), b = report(3), c = report(1);
  o.check(a == b && a == c, "byte-identical reports");
  int bad = 0;
  for (const auto& n : g_emitted) bad += !round_trips(n);
  o.check(bad == 0, "round trip");
  o.detail << "multistart reports identical across reruns and worker counts (" << a.size() << " bytes); " << g_emitted.size()
           << " emitted nets re-parse bit-exactly (" << bad << " mismatches)";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all{
      {1, "stationarity of symmetric configurations", 10, c1},
      {2, "first-variation identity", 60, c2},
      {3, "non-degeneracy classification", 60, c3},
      {4, "surgery conservation", 30, c4},
      {5, "surgery idempotence and termination", 30, c5},
      {6, "continuation", 120, c6},
      {7, "Lipschitz length comparison", 60, c7},
      {8, "equidistribution harness", 60, c8},
      {9, "multistart spectrum", 120, c9},
      {10, "determinism and round-trip", 60, c10},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.check(secs < c.budget, "over time budget");
    failed += !o.pass;
    std::printf("criterion %2d %-4s %s: %s [%.1fs / %.0fs]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str(),
                secs, c.budget);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
