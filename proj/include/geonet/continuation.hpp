#pragma once

// Following a stationary net along the conformal family g_t = (1 + tφ)g₀:
// secant predictor in the free coordinates, Newton corrector under g_t,
// bisection of the t-step when the corrector fails.

#include "geonet/solver.hpp"

#include <string>
#include <vector>

namespace geonet {

enum class OnDegenerate { Halt, Report };

struct ContinuationOptions {
  Tolerances tol;
  int max_corrector = 8;
  double min_step = 1e-6;
  OnDegenerate on_degenerate = OnDegenerate::Halt;
  double hessian_step = 1e-5;
};

struct ContinuationPoint {
  double t = 0.0;
  GammaNet net;
  VariationReport report;
  int corrector_iterations = 0;
  int bisections = 0;
};

struct ContinuationResult {
  std::vector<ContinuationPoint> points;
  bool halted = false;
  std::string halt_reason;
  double critical_lo = 0.0, critical_hi = 0.0;  // interval where degeneration was detected
};

inline std::vector<double> uniform_grid(double t_max, int steps) {
  if (steps < 1) fail(ErrorKind::InvalidInput, "continuation::continue_net", "need at least one t-step");
  std::vector<double> g;
  for (int i = 0; i <= steps; ++i) g.push_back(t_max * i / steps);
  return g;
}

namespace detail {

inline bool same_layout(const GammaNet& a, const GammaNet& b) {
  if (a.points().size() != b.points().size() || a.free_points() != b.free_points()) return false;
  for (std::size_t i = 0; i < a.points().size(); ++i)
    if (a.points()[i].chart != b.points()[i].chart || !(a.labels()[i].vertex == b.labels()[i].vertex &&
                                                        a.labels()[i].edge == b.labels()[i].edge &&
                                                        a.labels()[i].index == b.labels()[i].index))
      return false;
  return true;
}

inline SolveResult correct(const GammaNet& guess, const ContinuationOptions& o) {
  SolverOptions so;
  so.tol_stat = o.tol.stat;
  so.max_iter = o.max_corrector;
  so.newton_gate = std::numeric_limits<double>::infinity();
  so.hessian_step = o.hessian_step;
  return stationarize(guess, so);
}

}  // namespace detail

inline ContinuationResult continue_net(const GammaNet& net0, const MetricFamily& fam, const std::vector<double>& grid,
                                       const ContinuationOptions& o = {}) {
  const char* origin = "continuation::continue_net";
  if (grid.empty() || grid.front() != 0.0) fail(ErrorKind::InvalidInput, origin, "t-grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) fail(ErrorKind::InvalidInput, origin, "t-grid must be strictly increasing");
  if (grid.back() > fam.t_max() * (1 + 1e-12)) fail(ErrorKind::InvalidInput, origin, "t-grid exceeds the family's range");

  ClassifyOptions co;
  co.tol = o.tol;
  co.hessian_step = o.hessian_step;
  ContinuationResult res;
  GammaNet cur = net0.with_manifold(fam.at(0.0));
  if (max_defect(cur) > o.tol.stat)
    fail(ErrorKind::NotStationary, origin, "initial net is not stationary for g_0 (defect " +
                                               std::to_string(max_defect(cur)) + ")");
  auto accept = [&](double t, GammaNet net, int iters, int bis) -> bool {
    ContinuationPoint p{t, std::move(net), {}, iters, bis};
    p.report = hessian_and_classify(p.net, co);
    if (p.report.classification != Classification::Nondegenerate && o.on_degenerate == OnDegenerate::Halt) {
      res.halted = true;
      res.halt_reason = std::string("classification ") + to_string(p.report.classification) + " at t = " +
                        std::to_string(t);
      res.critical_lo = res.points.empty() ? 0.0 : res.points.back().t;
      res.critical_hi = t;
      return false;
    }
    res.points.push_back(std::move(p));
    return true;
  };
  if (!accept(0.0, cur, 0, 0)) return res;

  // Accepted states for the secant predictor (sub-steps included).
  std::optional<std::pair<double, GammaNet>> prev;
  double t = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double target = grid[k];
    double h = target - t;
    int iters = 0, bis = 0;
    while (t < target) {
      const double tn = std::min(target, t + h);
      const ManifoldPtr mt = fam.at(tn);
      GammaNet guess = cur.with_manifold(mt);
      if (prev && detail::same_layout(prev->second, cur)) {
        const VecX x1 = cur.coordinates(), x0 = prev->second.coordinates();
        const double s = (tn - t) / (t - prev->first);
        try {
          guess = cur.with_manifold(mt).with_coordinates(x1 + s * (x1 - x0));
        } catch (const Error&) {
          guess = cur.with_manifold(mt);
        }
      }
      try {
        SolveResult sr = detail::correct(guess, o);
        iters += sr.iterations;
        prev = std::make_pair(t, cur);
        cur = std::move(sr.net);
        t = tn;
      } catch (const Error& e) {
        if (is_input_error(e.kind())) throw;
        h *= 0.5;
        ++bis;
        if (h < o.min_step)
          fail(ErrorKind::NoConvergence, origin,
               "corrector failed at t = " + std::to_string(tn) + " after bisection to step " + std::to_string(h) +
                   ": " + e.what());
      }
    }
    if (!accept(t, cur, iters, bis)) return res;
  }
  return res;
}

struct FamilyRow {
  double t = 0.0;
  double length = 0.0;
  double defect = 0.0;
  double min_eigenvalue = 0.0;  // smallest |λ| of the reduced Hessian
  int null_count = 0;
  Classification classification = Classification::Indeterminate;
};

inline std::vector<FamilyRow> length_along_family(const std::vector<ContinuationPoint>& points) {
  std::vector<FamilyRow> rows;
  for (const auto& p : points) {
    FamilyRow r;
    r.t = p.t;
    r.length = p.report.length;
    r.defect = p.report.max_defect;
    r.min_eigenvalue = p.report.eigenvalues.size() ? p.report.eigenvalues.cwiseAbs().minCoeff() : 0.0;
    r.null_count = static_cast<int>(p.report.null_space.cols());
    r.classification = p.report.classification;
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const FamilyRow& a, const FamilyRow& b) { return a.t < b.t; });
  return rows;
}

}  // namespace geonet
