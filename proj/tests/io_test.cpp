#include "geonet/io.hpp"
#include "geonet/measure.hpp"

#include <gtest/gtest.h>

using namespace geonet;
using io::json;

namespace {

void expect_input_error(const std::function<void()>& f, const std::string& needle = "") {
  try {
    f();
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput) << e.what();
    if (!needle.empty()) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  }
}

TEST(Io, Fmt17RoundTripsDoubles) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(u(rng)));
    EXPECT_EQ(std::stod(io::fmt17(x)), x);
  }
  EXPECT_EQ(io::fmt17(0.1), "0.10000000000000001");
}

TEST(Io, NetFileRoundTripsBitExactly) {
  const json spec = {{"type", "ellipsoid"}, {"axes", {1.0, 1.3, 0.8}}};
  auto m = io::manifold_from_json(spec);
  const auto net = theta_net(m, Eigen::AngleAxisd(0.4, Vec3(1, 2, 3).normalized()).toRotationMatrix(), 3);
  const std::string text = io::net_to_text(net, spec);
  const auto back = io::net_from_json(json::parse(text));
  ASSERT_EQ(back.net.points().size(), net.points().size());
  for (std::size_t i = 0; i < net.points().size(); ++i) {
    EXPECT_EQ(back.net.points()[i].chart, net.points()[i].chart);
    EXPECT_EQ(back.net.points()[i].x[0], net.points()[i].x[0]);
    EXPECT_EQ(back.net.points()[i].x[1], net.points()[i].x[1]);
  }
  EXPECT_EQ(io::net_to_text(back.net, back.manifold), text);
  EXPECT_EQ(net_length(back.net), net_length(net));
}

TEST(Io, PinnedVerticesAndMultiplicitiesSurvive) {
  auto m = make_flat_torus();
  const auto loop = torus_loop(m, 1, 1, {0.2, 0.3}, 5, 3);
  const auto pinned = GammaNet(m, loop.graph(), {{0, loop.position(0)}}, {{0, loop.breaks(0)}}, {0});
  const auto back = io::net_from_json(json::parse(io::net_to_text(pinned)), m);
  EXPECT_EQ(back.net.pinned(), std::set<int>{0});
  EXPECT_EQ(back.net.graph().edge(0).mult, 3);
}

TEST(Io, AmbientPositionsAreProjectedAlongRays) {
  auto m = make_round_sphere(2.0);
  const json j = {{"schema_version", 1},
                  {"vertices", {{{"id", 0}, {"ambient", {0, 0, 5}}}, {{"id", 1}, {"ambient", {0, 0, -1}}}}},
                  {"edges", {{{"id", 0}, {"a", 0}, {"b", 1}, {"breaks", {{{"ambient", {1, 0, 0}}}}}}}}};
  const auto nf = io::net_from_json(j, m);
  EXPECT_NEAR(m->ambient(nf.net.position(0)).z(), 2.0, 1e-14);
  EXPECT_NEAR(net_length(nf.net), 2 * kPi, 1e-9);
}

TEST(Io, ManifoldSpecs) {
  EXPECT_EQ(io::manifold_from_json({{"type", "round_sphere"}})->builtin(), Builtin::RoundSphere);
  const auto t = io::manifold_from_json({{"type", "flat_torus"}, {"periods", {1.0, 2.0}}});
  EXPECT_DOUBLE_EQ(t->charts()[0].period()[1], 2.0);
  const auto s = io::manifold_from_json({{"type", "round_sphere"}, {"scale", 4.0}});
  EXPECT_NEAR(volume(*s), 16 * kPi, 1e-9);
  const json custom = {{"type", "custom"},
                       {"inj_lb", 1.0},
                       {"charts", {{{"lo", {0, 0}}, {"hi", {1, 1}}, {"periodic", {true, true}}, {"g11", "1"}, {"g12", "0"}, {"g22", "1"}}}}};
  EXPECT_NEAR(volume(*io::manifold_from_json(custom)), 1.0, 1e-12);
  const json conf = {{"type", "round_sphere"},
                     {"conformal", {{"t", 0.5}, {"bump", {{"kind", "constant"}, {"amplitude", 2.0}}}}}};
  EXPECT_NEAR(volume(*io::manifold_from_json(conf)), 8 * kPi, 1e-9);
}

TEST(Io, ValidationErrors) {
  expect_input_error([] { io::manifold_from_json({{"type", "klein_bottle"}}); }, "unknown type");
  expect_input_error([] { io::manifold_from_json({{"type", "ellipsoid"}}); }, "axes");
  expect_input_error([] { io::detail::check_version({{"type", "round_sphere"}}, "m"); }, "schema_version");
  expect_input_error([] { io::detail::check_version({{"schema_version", 2}}, "m"); }, "schema_version");
  expect_input_error([] { io::net_from_json({{"vertices", json::array()}, {"edges", json::array()}}); }, "no manifold");
  auto m = make_round_sphere();
  expect_input_error([&] { io::point_from_json(*m, {{"chart", 7}, {"x", {0, 0}}}, "p"); }, "chart");
  expect_input_error([&] { io::point_from_json(*m, {{"chart", 0}, {"x", {0, "a"}}}, "p"); }, "number");
}

TEST(Io, ZeroLengthEdgeIsDegenerateInput) {
  const json j = {{"schema_version", 1},
                  {"manifold", {{"type", "round_sphere"}}},
                  {"vertices", {{{"id", 0}, {"ambient", {1, 0, 0}}}, {{"id", 1}, {"ambient", {1, 0, 0}}}}},
                  {"edges", {{{"id", 0}, {"a", 0}, {"b", 1}}}}};
  try {
    io::net_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateEdge);
    const json rec = io::failure_record(e);
    EXPECT_EQ(rec["exit_code"], 2);
    EXPECT_EQ(rec["kind"], "degenerate edge");
  }
}

TEST(Io, FailureRecordExitCodes) {
  EXPECT_EQ(io::failure_record(Error(ErrorKind::NoConvergence, "solver::stationarize", "x"))["exit_code"], 3);
  EXPECT_EQ(io::failure_record(Error(ErrorKind::AmbiguousGeometry, "surgery::regularize", "x"))["exit_code"], 3);
  EXPECT_EQ(io::failure_record(Error(ErrorKind::NotStationary, "surgery::regularize", "x"))["exit_code"], 2);
}

TEST(Io, CsvQuotingAndNumbers) {
  io::Csv c({"a", "b", "c"});
  c.row(1, 0.5, std::string("x,y"));
  c.row(true, 0.1, "q\"q");
  EXPECT_EQ(c.text(), "a,b,c\n1,0.5,\"x,y\"\ntrue,0.10000000000000001,\"q\"\"q\"\n");
  EXPECT_THROW(c.row(1, 2), Error);
}

TEST(Io, SurgeryLogAndSvgAreWellFormed) {
  auto m = make_round_sphere();
  const auto in = disjoint_union({great_circle_net(m, {0, 0, 1}, {1, 0, 0}), great_circle_net(m, {1, 0, 0}, {0, 1, 1})});
  const auto r = regularize(in);
  const json log = json::parse(io::surgery_log_json(r.log).dump());
  EXPECT_EQ(log["steps"].size(), r.log.steps.size());
  const std::string svg = io::svg_plot(*m, {{r.net}, {{ray_point(*m, {1, 0, 0}), 0.3}}}, "t");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("<circle"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

}  // namespace
