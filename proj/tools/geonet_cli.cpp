// geonet: command-line driver. Exit codes: 0 ok, 2 invalid input, 3
// numerical failure (a failure.json record is written to the output
// directory and echoed on stderr).

#include "geonet/geonet.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace geonet;
using io::json;

namespace {

constexpr int kExitOk = 0, kExitInput = 2, kExitNumeric = 3;

struct Flags {
  std::string config, manifold, net, graph, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, t_steps;
  std::optional<double> tol_stat, tol_geo, t_max;
};

// Config file merged with flags; flags win.
struct Run {
  std::string command;
  json cfg = json::object();
  fs::path base;  // directory of the config file
  Flags flags;
  fs::path out;
  Tolerances tol;
  std::uint64_t seed = 0;
  int workers = 1;

  fs::path resolve(const std::string& p) const { return fs::path(p).is_absolute() ? fs::path(p) : base / p; }

  // A file path (string) or an inline object.
  json section(const char* key, const std::string& flag) const {
    if (!flag.empty()) return io::read_json(flag);
    if (!cfg.contains(key)) return json();
    const json& v = cfg[key];
    if (v.is_string()) return io::read_json(resolve(v.get<std::string>()).string());
    return v;
  }

  ManifoldPtr manifold(bool required = true) const {
    json j = section("manifold", flags.manifold);
    if (j.is_null()) {
      if (required) fail(ErrorKind::InvalidInput, "cli::" + command, "no manifold given (--manifold)");
      return nullptr;
    }
    if (!flags.manifold.empty() || (cfg.contains("manifold") && cfg["manifold"].is_string()))
      io::detail::check_version(j, "manifold file");
    return io::manifold_from_json(j);
  }

  json manifold_spec() const { return section("manifold", flags.manifold); }

  io::NetFile net_from(const json& j, ManifoldPtr m) const {
    io::detail::check_version(j, "net file");
    return io::net_from_json(j, std::move(m));
  }

  io::NetFile net(ManifoldPtr m) const {
    const json j = section("net", flags.net);
    if (j.is_null()) fail(ErrorKind::InvalidInput, "cli::" + command, "no net given (--net)");
    return net_from(j, std::move(m));
  }

  WeightedMultigraph graph() const {
    const json j = section("graph", flags.graph);
    if (j.is_null()) fail(ErrorKind::InvalidInput, "cli::" + command, "no graph given (--graph)");
    io::detail::check_version(j, "graph file");
    return io::graph_from_json(j);
  }

  double number(const char* key, double dflt) const {
    return cfg.contains(key) ? io::detail::num(cfg[key], std::string("config.") + key) : dflt;
  }
  int integer(const char* key, int dflt) const {
    return cfg.contains(key) ? io::detail::integer(cfg[key], std::string("config.") + key) : dflt;
  }

  void write(const std::string& name, const std::string& text) const { io::write_text((out / name).string(), text); }
};

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int cmd_solve(const Run& r) {
  ManifoldPtr m = r.manifold(false);
  const json mspec = r.manifold_spec();
  SolverOptions so;
  so.tol_stat = r.tol.stat;
  so.max_iter = r.integer("max_iter", so.max_iter);
  ClassifyOptions co;
  co.tol = r.tol;
  std::vector<GammaNet> nets;
  json embed = mspec;
  if (!r.section("net", r.flags.net).is_null()) {
    auto nf = r.net(m);
    if (embed.is_null()) embed = nf.manifold;
    auto res = stationarize(nf.net, so);
    io::Csv trace({"iteration", "phase", "length", "defect", "step"});
    for (const auto& t : res.trace) trace.row(t.iteration, t.phase, t.length, t.defect, t.step);
    r.write("trace.csv", trace.text());
    nets.push_back(std::move(res.net));
  } else {
    if (!m) fail(ErrorKind::InvalidInput, "cli::solve", "no manifold given (--manifold)");
    MultistartOptions mo;
    mo.seeds = r.integer("seeds", 10);
    mo.rng_seed = r.seed;
    mo.workers = r.workers;
    mo.solver = so;
    nets = multistart(m, r.graph(), mo);
  }
  fs::create_directories(r.out / "nets");
  io::Csv csv({"index", "length", "max_defect", "classification", "vertices", "edges", "file"});
  for (std::size_t i = 0; i < nets.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "nets/net_%03zu.json", i);
    std::string cls = "indeterminate";
    try {
      cls = to_string(hessian_and_classify(nets[i], co).classification);
    } catch (const Error&) {
    }
    csv.row(i, net_length(nets[i]), max_defect(nets[i]), cls, nets[i].graph().vertices().size(),
            nets[i].graph().edges().size(), std::string(name));
    r.write(name, io::net_to_text(nets[i], embed));
  }
  r.write("solve.csv", csv.text());
  if (!nets.empty()) r.write("solve.svg", io::svg_plot(nets[0].manifold(), {nets, {}}, "solve"));
  std::cout << "nets: " << nets.size() << "\n";
  for (std::size_t i = 0; i < nets.size(); ++i) std::cout << "net " << i << " length: " << io::fmt17(net_length(nets[i])) << "\n";
  return kExitOk;
}

int cmd_verify(const Run& r) {
  const auto nf = r.net(r.manifold(false));
  const GammaNet& net = nf.net;
  const auto defects = balancing_defect(net);
  const double md = max_defect(net);
  io::Csv csv({"point", "vertex", "edge", "index", "chart", "x1", "x2", "defect", "pinned"});
  for (std::size_t i = 0; i < defects.size(); ++i) {
    const auto& d = defects[i];
    csv.row(i, d.label.vertex, d.label.edge, d.label.index, d.at.chart, d.at.x[0], d.at.x[1], d.norm, d.pinned);
  }
  r.write("verify_defects.csv", csv.text());
  json rep;
  rep["schema_version"] = io::kSchemaVersion;
  rep["length"] = io::fmt17(net_length(net));
  rep["max_defect"] = io::fmt17(md);
  rep["stationary"] = md <= r.tol.stat;
  rep["vertices"] = net.graph().vertices().size();
  rep["edges"] = net.graph().edges().size();
  rep["good"] = is_good(net.graph());
  std::string cls = "not stationary";
  if (md <= r.tol.stat) {
    ClassifyOptions co;
    co.tol = r.tol;
    const auto vr = hessian_and_classify(net, co);
    cls = to_string(vr.classification);
    json ev = json::array();
    for (Eigen::Index i = 0; i < vr.eigenvalues.size(); ++i) ev.push_back(io::fmt17(vr.eigenvalues[i]));
    rep["reduced_eigenvalues"] = ev;
    rep["null_vectors"] = vr.null_space.cols();
    json res = json::array();
    for (double x : vr.parallel_residuals) res.push_back(io::fmt17(x));
    rep["parallel_residuals"] = res;
    rep["caveat"] = vr.caveat;
  }
  rep["classification"] = cls;
  r.write("verify.json", json_text(rep));
  r.write("verify.svg", io::svg_plot(net.manifold(), {{net}, {}}, "verify"));
  std::cout << "length: " << io::fmt17(net_length(net)) << "\nmax_defect: " << io::fmt17(md)
            << "\nstationary: " << (md <= r.tol.stat ? "true" : "false") << "\nclassification: " << cls << "\n";
  return kExitOk;
}

int cmd_regularize(const Run& r) {
  const auto nf = r.net(r.manifold(false));
  const json embed = r.manifold_spec().is_null() ? nf.manifold : r.manifold_spec();
  const auto res = regularize(nf.net, r.tol);
  const GammaNet& out = res.net;
  bool good = true;
  for (const auto& comp : out.graph().components()) {
    WeightedMultigraph sub;
    for (int v : comp) sub.add_vertex(v);
    for (const auto& [id, e] : out.graph().edges())
      if (std::find(comp.begin(), comp.end(), e.a) != comp.end()) sub.add_edge(id, e.a, e.b, e.mult);
    good = good && is_good(sub);
  }
  r.write("regularized.json", io::net_to_text(out, embed));
  r.write("surgery_log.json", json_text(io::surgery_log_json(res.log)));
  io::Csv csv({"input_length", "output_length", "vertices", "edges", "good_star", "max_defect", "steps"});
  csv.row(net_length(nf.net), net_length(out), out.graph().vertices().size(), out.graph().edges().size(), good,
          max_defect(out), res.log.steps.size());
  r.write("regularize.csv", csv.text());
  r.write("regularize.svg", io::svg_plot(out.manifold(), {{out}, {}}, "regularize"));
  std::cout << "vertices: " << out.graph().vertices().size() << "\nedges: " << out.graph().edges().size()
            << "\ngood_star: " << (good ? "true" : "false") << "\nlength: " << io::fmt17(net_length(out))
            << "\nsteps: " << res.log.steps.size() << "\n";
  return kExitOk;
}

int cmd_continue(const Run& r) {
  ManifoldPtr m = r.manifold(false);
  const auto nf = r.net(m);
  if (!m) m = nf.net.manifold_ptr();
  const json embed = r.manifold_spec().is_null() ? nf.manifold : r.manifold_spec();
  if (!r.cfg.contains("bump")) fail(ErrorKind::InvalidInput, "cli::continue", "config needs a \"bump\" object");
  const Bump bump = io::bump_from_json(*m, r.cfg["bump"]);
  const double t_max = r.flags.t_max ? *r.flags.t_max : r.number("t_max", 0.1);
  const int steps = r.flags.t_steps ? *r.flags.t_steps : r.integer("t_steps", 20);
  MetricFamily fam(m, bump, t_max);
  ContinuationOptions o;
  o.tol = r.tol;
  const std::string mode = r.cfg.value("on_degenerate", "halt");
  if (mode == "report") o.on_degenerate = OnDegenerate::Report;
  else if (mode != "halt") fail(ErrorKind::InvalidInput, "cli::continue", "on_degenerate must be \"halt\" or \"report\"");
  const auto res = continue_net(nf.net, fam, uniform_grid(t_max, steps), o);
  const auto rows = length_along_family(res.points);
  io::Csv csv({"t", "length", "defect", "min_eigenvalue", "null_vectors", "classification"});
  for (const auto& row : rows) csv.row(row.t, row.length, row.defect, row.min_eigenvalue, row.null_count, to_string(row.classification));
  r.write("continuation.csv", csv.text());
  std::ostringstream rep;
  rep << "family: (1 + t*phi) g0, t in [0, " << io::fmt17(t_max) << "], " << steps << " steps\n";
  rep << "on_degenerate: " << mode << "\n";
  rep << "emitted: " << res.points.size() << "\n";
  rep << "halted: " << (res.halted ? "true" : "false") << "\n";
  if (res.halted) {
    rep << "halt_reason: " << res.halt_reason << "\n";
    rep << "critical_interval: [" << io::fmt17(res.critical_lo) << ", " << io::fmt17(res.critical_hi) << "]\n";
  }
  for (const auto& p : res.points)
    rep << "t " << io::fmt17(p.t) << ": length " << io::fmt17(p.report.length) << ", defect " << io::fmt17(p.report.max_defect)
        << ", corrector iterations " << p.corrector_iterations << ", bisections " << p.bisections << ", "
        << to_string(p.report.classification) << "\n";
  r.write("continuation_report.txt", rep.str());
  if (!res.points.empty()) {
    r.write("continued.json", io::net_to_text(res.points.back().net, embed));
    std::vector<GammaNet> ends{res.points.front().net, res.points.back().net};
    r.write("continuation.svg", io::svg_plot(*m, {ends, {}}, "continuation"));
  }
  std::cout << rep.str();
  return kExitOk;
}

std::vector<Ball> read_cover(const Run& r, const Manifold& m) {
  if (!r.cfg.contains("cover")) fail(ErrorKind::InvalidInput, "cli::density-scan", "config needs a \"cover\"");
  const json& c = r.cfg["cover"];
  std::vector<Ball> out;
  if (c.is_object()) {
    // {"grid": [nx, ny], "radius": r}: centers of an nx-by-ny grid on each chart.
    const auto g = io::detail::need(c, "grid", "cover");
    const int nx = io::detail::integer(g.at(0), "cover.grid"), ny = io::detail::integer(g.at(1), "cover.grid");
    const double rad = io::detail::num(io::detail::need(c, "radius", "cover"), "cover.radius");
    for (std::size_t k = 0; k < m.charts().size(); ++k) {
      const ChartInfo& ci = m.charts()[k];
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
          out.push_back({ChartPoint{static_cast<int>(k), ci.lo + ci.period().cwiseProduct(Vec2((i + 0.5) / nx, (j + 0.5) / ny))}, rad});
    }
    return out;
  }
  for (const auto& b : c)
    out.push_back({io::point_from_json(m, io::detail::need(b, "center", "cover"), "cover.center"),
                   io::detail::num(io::detail::need(b, "radius", "cover"), "cover.radius")});
  return out;
}

int cmd_density(const Run& r) {
  ManifoldPtr m = r.manifold();
  std::vector<WeightedMultigraph> graphs;
  if (!r.flags.graph.empty() || (r.cfg.contains("graph"))) graphs.push_back(r.graph());
  for (const auto& g : r.cfg.value("graphs", json::array())) {
    const json j = g.is_string() ? io::read_json(r.resolve(g.get<std::string>()).string()) : g;
    io::detail::check_version(j, "graph file");
    graphs.push_back(io::graph_from_json(j));
  }
  if (graphs.empty()) fail(ErrorKind::InvalidInput, "cli::density-scan", "no graphs given");
  const auto cover = read_cover(r, *m);
  MultistartOptions mo;
  mo.seeds = r.integer("seeds", 20);
  mo.rng_seed = r.seed;
  mo.workers = r.workers;
  mo.solver.tol_stat = r.tol.stat;
  const auto rep = density_scan(m, graphs, cover, mo, r.tol);
  io::Csv balls({"ball", "chart", "x1", "x2", "radius", "hit", "nets"});
  for (std::size_t i = 0; i < rep.balls.size(); ++i) {
    std::string ids;
    for (int k : rep.balls[i].nets) ids += (ids.empty() ? "" : " ") + std::to_string(k);
    const Ball& b = rep.balls[i].ball;
    balls.row(i, b.center.chart, b.center.x[0], b.center.x[1], b.radius, rep.balls[i].hit, ids);
  }
  r.write("coverage.csv", balls.text());
  io::Csv nets({"net", "graph", "length", "classification"});
  std::vector<GammaNet> all;
  for (std::size_t i = 0; i < rep.nets.size(); ++i) {
    nets.row(i, rep.nets[i].graph, rep.nets[i].length, to_string(rep.nets[i].classification));
    all.push_back(rep.nets[i].net);
  }
  r.write("density_nets.csv", nets.text());
  r.write("density.svg", io::svg_plot(*m, {all, cover}, "density scan"));
  std::cout << "nets: " << rep.nets.size() << "\nballs: " << cover.size() << "\ncoverage: " << io::fmt17(rep.coverage) << "\n";
  return kExitOk;
}

ScalarField read_field(const Run& r, const ManifoldPtr& m) {
  if (!r.cfg.contains("field")) fail(ErrorKind::InvalidInput, "cli::equidist", "config needs a \"field\"");
  const json& f = r.cfg["field"];
  if (f.contains("constant")) {
    const double c = io::detail::num(f["constant"], "field.constant");
    return [c](const ChartPoint&) { return c; };
  }
  if (f.contains("expression")) {
    const auto e = Expression::parse(f["expression"].get<std::string>());
    return [e](const ChartPoint& p) { return e(p.x); };
  }
  if (f.contains("bump")) {
    const Bump b = io::bump_from_json(*m, f["bump"]);
    return [b, m](const ChartPoint& p) { return b.value(*m, p); };
  }
  fail(ErrorKind::InvalidInput, "cli::equidist", "field needs \"constant\", \"expression\" or \"bump\"");
}

int cmd_equidist(const Run& r) {
  ManifoldPtr m = r.manifold(false);
  std::vector<GammaNet> nets;
  if (!r.flags.net.empty() || r.cfg.contains("net")) {
    auto nf = r.net(m);
    if (!m) m = nf.net.manifold_ptr();
    nets.push_back(nf.net);
  }
  for (const auto& n : r.cfg.value("nets", json::array())) {
    const json j = n.is_string() ? io::read_json(r.resolve(n.get<std::string>()).string()) : n;
    auto nf = r.net_from(j, m);
    if (!m) m = nf.net.manifold_ptr();
    nets.push_back(nf.net);
  }
  if (!m) fail(ErrorKind::InvalidInput, "cli::equidist", "no manifold given");
  const ScalarField f = read_field(r, m);
  const int res = r.integer("resolution", 64);
  io::Csv csv({"nets", "lhs", "rhs", "gap", "total_length"});
  if (!nets.empty()) {
    const auto e = equidistribution_ratio(nets, f, res);
    csv.row(nets.size(), e.lhs, e.rhs, e.gap, e.total_length);
    std::cout << "lhs: " << io::fmt17(e.lhs) << "\nrhs: " << io::fmt17(e.rhs) << "\ngap: " << io::fmt17(e.gap) << "\n";
  }
  r.write("equidist.csv", csv.text());
  if (r.cfg.contains("trend")) {
    const json& t = r.cfg["trend"];
    std::vector<int> ks;
    for (const auto& k : io::detail::need(t, "ks", "trend")) ks.push_back(io::detail::integer(k, "trend.ks"));
    const int trials = t.contains("trials") ? io::detail::integer(t["trials"], "trend.trials") : 8;
    io::Csv tc({"k", "mean_gap", "min_gap", "max_gap"});
    for (const auto& row : rotated_theta_trend(m, f, ks, trials, r.seed, res)) {
      tc.row(row.k, row.mean_gap, row.min_gap, row.max_gap);
      std::cout << "k " << row.k << " mean_gap: " << io::fmt17(row.mean_gap) << "\n";
    }
    r.write("equidist_trend.csv", tc.text());
  }
  return kExitOk;
}

int cmd_lipschitz(const Run& r) {
  ManifoldPtr g2 = r.manifold();
  const int nseg = r.integer("segments", 1000);
  const auto curves = random_geodesic_segments(g2, nseg, r.seed, r.number("min_length", 0.2), r.number("max_length", 2.0));
  std::vector<std::pair<std::string, ManifoldPtr>> cases;
  if (r.cfg.contains("g1")) cases.push_back({"g1", io::manifold_from_json(r.cfg["g1"])});
  const int nb = r.integer("bumps", r.cfg.contains("g1") ? 0 : 20);
  std::mt19937_64 rng(r.seed + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const detail::AreaSampler sampler(*g2);
  for (int b = 0; b < nb; ++b) {
    Bump bump{Bump::Kind::Smooth, sampler.sample(*g2, rng), 0.3 + 0.7 * u(rng), 1.0};
    cases.push_back({"bump " + std::to_string(b), std::make_shared<ConformalManifold>(g2, bump, 0.05 + 0.95 * u(rng))});
  }
  io::Csv csv({"case", "s", "min_slack", "max_slack", "violations"});
  io::Csv rows({"case", "curve", "l1", "l2", "bound", "slack"});
  int violations = 0;
  for (const auto& [name, g1] : cases) {
    const auto rep = lipschitz_check(*g1, *g2, curves);
    csv.row(name, rep.s, rep.min_slack, rep.max_slack, rep.violations.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
      rows.row(name, i, rep.rows[i].l1, rep.rows[i].l2, rep.rows[i].bound, rep.rows[i].slack);
    violations += static_cast<int>(rep.violations.size());
  }
  r.write("lipschitz.csv", csv.text());
  r.write("lipschitz_rows.csv", rows.text());
  std::cout << "cases: " << cases.size() << "\ncurves: " << curves.size() << "\nviolations: " << violations << "\n";
  return kExitOk;
}

void write_meta(const Run& r, int argc, char** argv, int code) {
  json meta;
  meta["schema_version"] = io::kSchemaVersion;
  meta["command"] = r.command;
  std::vector<std::string> args(argv, argv + argc);
  meta["argv"] = args;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  meta["timestamp"] = buf;
  meta["exit_code"] = code;
  io::write_text((r.out / "metadata.json").string(), json_text(meta));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary geodesic networks on Riemannian surfaces"};
  app.require_subcommand(1);
  Flags f;
  const std::vector<std::string> names{"solve", "verify", "regularize", "continue", "density-scan", "equidist", "lipschitz"};
  for (const auto& n : names) {
    auto* s = app.add_subcommand(n);
    s->add_option("--config", f.config, "JSON config file");
    s->add_option("--manifold", f.manifold, "manifold spec file");
    s->add_option("--net", f.net, "net file");
    s->add_option("--graph", f.graph, "graph file");
    s->add_option("--out", f.out, "output directory");
    s->add_option("--seed", f.seed, "rng seed");
    s->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--tol-stat", f.tol_stat, "stationarity tolerance")->check(CLI::PositiveNumber);
    s->add_option("--tol-geo", f.tol_geo, "geometric coincidence tolerance")->check(CLI::PositiveNumber);
    s->add_option("--t-max", f.t_max, "continuation parameter range")->check(CLI::NonNegativeNumber);
    s->add_option("--t-steps", f.t_steps, "continuation steps")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }
  Run r;
  r.command = app.get_subcommands().front()->get_name();
  r.flags = f;
  r.out = f.out.empty() ? fs::path("out") : fs::path(f.out);
  int code = kExitOk;
  try {
    if (!f.config.empty()) {
      r.cfg = io::read_json(f.config);
      io::detail::check_version(r.cfg, f.config);
      r.base = fs::path(f.config).parent_path();
      if (f.out.empty() && r.cfg.contains("out")) r.out = r.resolve(r.cfg["out"].get<std::string>());
    }
    r.tol.stat = f.tol_stat ? *f.tol_stat : r.number("tol_stat", r.tol.stat);
    r.tol.geo = f.tol_geo ? *f.tol_geo : r.number("tol_geo", r.tol.geo);
    r.seed = f.seed ? *f.seed : static_cast<std::uint64_t>(r.integer("seed", 0));
    r.workers = f.workers ? *f.workers : r.integer("workers", 1);
    fs::create_directories(r.out);
    if (r.command == "solve") code = cmd_solve(r);
    else if (r.command == "verify") code = cmd_verify(r);
    else if (r.command == "regularize") code = cmd_regularize(r);
    else if (r.command == "continue") code = cmd_continue(r);
    else if (r.command == "density-scan") code = cmd_density(r);
    else if (r.command == "equidist") code = cmd_equidist(r);
    else code = cmd_lipschitz(r);
  } catch (const Error& e) {
    code = is_input_error(e.kind()) ? kExitInput : kExitNumeric;
    const std::string rec = json_text(io::failure_record(e));
    std::cerr << rec;
    std::error_code ec;
    fs::create_directories(r.out, ec);
    if (!ec) io::write_text((r.out / "failure.json").string(), rec);
  } catch (const std::exception& e) {
    // JSON type errors and the like from malformed input files.
    code = kExitInput;
    const std::string rec = json_text(io::failure_record(Error(ErrorKind::InvalidInput, "cli::" + r.command, e.what())));
    std::cerr << rec;
    std::error_code ec;
    fs::create_directories(r.out, ec);
    if (!ec) io::write_text((r.out / "failure.json").string(), rec);
  }
  std::error_code ec;
  if (fs::is_directory(r.out, ec)) write_meta(r, argc, argv, code);
  return code;
}
