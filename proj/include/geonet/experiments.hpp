#pragma once

// Desk-scale harnesses: ball coverage by multistart nets, the ratio of line
// to volume averages of a field, and the Lipschitz comparison of lengths
// under two metrics.

#include "geonet/measure.hpp"
#include "geonet/shapes.hpp"
#include "geonet/solver.hpp"

#include <random>
#include <vector>

namespace geonet {

struct FoundNet {
  int graph = 0;  // index into the scanned graph list
  GammaNet net;
  double length = 0.0;
  Classification classification = Classification::Indeterminate;
};

struct BallCoverage {
  Ball ball;
  bool hit = false;
  std::vector<int> nets;  // indices into DensityReport::nets
};

struct DensityReport {
  std::vector<FoundNet> nets;
  std::vector<BallCoverage> balls;
  double coverage = 0.0;
};

/// Multistart over each graph (its own rng seed: o.rng_seed + index), then
/// ball membership of the sample points of every found net.
inline DensityReport density_scan(ManifoldPtr m, const std::vector<WeightedMultigraph>& graphs,
                                  const std::vector<Ball>& cover, const MultistartOptions& o, const Tolerances& tol = {}) {
  DensityReport r;
  ClassifyOptions co;
  co.tol = tol;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    MultistartOptions og = o;
    og.rng_seed = o.rng_seed + gi;
    for (auto& net : multistart(m, graphs[gi], og)) {
      FoundNet f{static_cast<int>(gi), net, net_length(net), Classification::Indeterminate};
      try {
        f.classification = hessian_and_classify(net, co).classification;
      } catch (const Error&) {
      }
      r.nets.push_back(std::move(f));
    }
  }
  int hits = 0;
  for (const Ball& b : cover) {
    BallCoverage c{b, false, {}};
    for (std::size_t k = 0; k < r.nets.size(); ++k) {
      bool in = false;
      for (const auto& seg : r.nets[k].net.segments()) {
        for (const auto& p : seg.samples) {
          if (m->ambient_delta(b.center, p).norm() <= b.radius + tol.geo) {
            in = true;
            break;
          }
        }
        if (in) break;
      }
      if (in) c.nets.push_back(static_cast<int>(k));
    }
    c.hit = !c.nets.empty();
    hits += c.hit;
    r.balls.push_back(std::move(c));
  }
  r.coverage = cover.empty() ? 0.0 : static_cast<double>(hits) / cover.size();
  return r;
}

struct EquidistributionResult {
  double lhs = 0.0, rhs = 0.0, gap = 0.0;
  double total_length = 0.0;
};

/// Multiplicity-weighted line average of f over the nets against its volume
/// average.
inline EquidistributionResult equidistribution_ratio(const std::vector<GammaNet>& nets, const ScalarField& f,
                                                     int resolution = 64) {
  const char* origin = "experiments::equidistribution_ratio";
  if (nets.empty()) fail(ErrorKind::InvalidInput, origin, "no nets");
  const Manifold& m = nets.front().manifold();
  double num = 0.0, len = 0.0;
  for (const auto& net : nets) {
    for (std::size_t s = 0; s < net.segments().size(); ++s) {
      const int mult = net.segment_refs()[s].mult;
      num += mult * segment_integral(m, net.segments()[s], f);
      len += mult * net.segments()[s].length;
    }
  }
  if (!(len > 0)) fail(ErrorKind::InvalidInput, origin, "total length is zero");
  EquidistributionResult r;
  r.total_length = len;
  r.lhs = num / len;
  r.rhs = volume_integral(m, f, resolution) / volume(m, resolution);
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

/// Rotation drawn uniformly from SO(3) (normalized Gaussian quaternion).
template <class Rng>
Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

struct TrendRow {
  int k = 0;
  double mean_gap = 0.0;
  double min_gap = 0.0, max_gap = 0.0;
};

/// Mean equidistribution gap of k randomly rotated theta nets, over `trials`
/// draws per k. Trial j of every k uses the stream (rng_seed, k, j).
inline std::vector<TrendRow> rotated_theta_trend(ManifoldPtr m, const ScalarField& f, const std::vector<int>& ks,
                                                 int trials, std::uint64_t rng_seed, int resolution = 64) {
  const double rhs = volume_integral(*m, f, resolution) / volume(*m, resolution);
  std::vector<TrendRow> rows;
  for (int k : ks) {
    if (k < 1 || trials < 1) fail(ErrorKind::InvalidInput, "experiments::equidistribution_ratio", "k and trials must be positive");
    TrendRow row{k, 0.0, std::numeric_limits<double>::infinity(), 0.0};
    for (int j = 0; j < trials; ++j) {
      std::seed_seq seq{static_cast<std::uint32_t>(rng_seed), static_cast<std::uint32_t>(rng_seed >> 32),
                        static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j)};
      std::mt19937_64 rng(seq);
      double num = 0.0, len = 0.0;
      for (int i = 0; i < k; ++i) {
        const GammaNet net = theta_net(m, random_rotation(rng));
        for (std::size_t s = 0; s < net.segments().size(); ++s) {
          const int mult = net.segment_refs()[s].mult;
          num += mult * segment_integral(*m, net.segments()[s], f);
          len += mult * net.segments()[s].length;
        }
      }
      const double gap = std::abs(num / len - rhs);
      row.mean_gap += gap / trials;
      row.min_gap = std::min(row.min_gap, gap);
      row.max_gap = std::max(row.max_gap, gap);
    }
    rows.push_back(row);
  }
  return rows;
}

/// Geodesic polylines of g from area-uniform starts in uniform directions,
/// g-lengths uniform in [min_len, max_len].
inline std::vector<std::vector<ChartPoint>> random_geodesic_segments(ManifoldPtr m, int count, std::uint64_t rng_seed,
                                                                     double min_len = 0.2, double max_len = 2.0,
                                                                     int steps = 64) {
  const detail::AreaSampler sampler(*m);
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<ChartPoint>> out;
  for (int i = 0; i < count; ++i) {
    const ChartPoint a = sampler.sample(*m, rng);
    const double ang = 2 * kPi * u(rng);
    Vec2 v(std::cos(ang), std::sin(ang));
    v /= norm(m->metric(a.chart, a.x), v);
    const double len = min_len + (max_len - min_len) * u(rng);
    out.push_back(geodesic_ivp(*m, a, v, len, {steps, true}).samples);
  }
  return out;
}

struct LipschitzRow {
  double l1 = 0.0, l2 = 0.0;
  double bound = 0.0;  // (√(1+s) − 1)·L2
  double slack = 0.0;  // bound − (L1 − L2)
};

struct LipschitzReport {
  double s = 0.0;  // sampled sup |g1(v,v) − g2(v,v)| / g2(v,v)
  std::vector<LipschitzRow> rows;
  double min_slack = 0.0, max_slack = 0.0;
  std::vector<int> violations;  // rows with slack < −tol
};

/// Checks L1 − L2 ≤ (√(1+s) − 1)·L2 on each polyline, lengths by the same
/// quadrature under both metrics.
inline LipschitzReport lipschitz_check(const Manifold& g1, const Manifold& g2,
                                       const std::vector<std::vector<ChartPoint>>& curves, double tol = 1e-6,
                                       int grid = 64) {
  LipschitzReport r;
  r.s = metric_distance(g2, g1, g2, grid).value;
  const double c = std::sqrt(1.0 + r.s) - 1.0;
  r.min_slack = std::numeric_limits<double>::infinity();
  r.max_slack = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curves.size(); ++i) {
    LipschitzRow row;
    row.l1 = polyline_length(g1, curves[i]);
    row.l2 = polyline_length(g2, curves[i]);
    row.bound = c * row.l2;
    row.slack = row.bound - (row.l1 - row.l2);
    r.min_slack = std::min(r.min_slack, row.slack);
    r.max_slack = std::max(r.max_slack, row.slack);
    if (row.slack < -tol) r.violations.push_back(static_cast<int>(i));
    r.rows.push_back(row);
  }
  if (curves.empty()) r.min_slack = r.max_slack = 0.0;
  return r;
}

}  // namespace geonet
