#include "lagflow/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace lagflow;
namespace fs = std::filesystem;

namespace {

Scenario make(ScenarioKind kind, int m) {
  ScenarioSpec s;
  s.kind = kind;
  s.resolution = m;
  return generate(s);
}

void expect_same(const DiscreteVarifold& a, const DiscreteVarifold& b) {
  ASSERT_EQ(a.n(), b.n());
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.edges(), b.edges());
  EXPECT_EQ(a.h_max(), b.h_max());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].position, b[i].position);
    EXPECT_EQ(a[i].frame.vectors(), b[i].frame.vectors());
    EXPECT_EQ(a[i].weight, b[i].weight);
    EXPECT_EQ(a[i].multiplicity, b[i].multiplicity);
  }
}

DiagnosticsRow sample_row() {
  DiagnosticsRow r;
  r.time = 0.1;
  r.mass = 1.0 / 3.0;
  r.sup_beta = 4.71238898038469;
  r.h_l2_normalized = 0.1;
  r.h_l2_raw = std::sqrt(2.0);
  r.support_radius = 0.7;
  r.dissipation = -6.283185307179586;
  r.mass_rate = -1e-17;
  r.angle_evolution_residual = 3.3e-5;
  r.energy_integral = 1.25;
  r.omega_residual_max = 2.2e-16;
  return r;
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lagflow_io_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(VarifoldIo, RoundTripsExactly) {
  for (ScenarioKind k : {ScenarioKind::Ellipse, ScenarioKind::ProductTorus}) {
    const Scenario s = make(k, 256);
    expect_same(s.varifold, varifold_from_json(Json::parse(to_json(s.varifold).dump())));
  }
  const fs::path d = temp_dir("varifold");
  const Scenario c = make(ScenarioKind::Circle, 64);
  write_varifold(d / "nested" / "c.json", c.varifold);
  expect_same(c.varifold, read_varifold(d / "nested" / "c.json"));
}

TEST(VarifoldIo, Errors) {
  try {
    read_varifold("/nonexistent/lagflow.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
  for (const char* bad : {R"({"n":1})", R"({"n":1,"particles":[{"position":[0,0]}]})",
                          R"({"n":1,"particles":[{"position":[0,0],"frame":[[1,0]],"weight":-1}]})"}) {
    EXPECT_THROW(varifold_from_json(Json::parse(bad)), Error) << bad;
  }
}

TEST(ScenarioSpecIo, RoundTrip) {
  ScenarioSpec s;
  s.kind = ScenarioKind::LineUnionPhases;
  s.resolution = 300;
  s.params = {{"angles", {0.0, 0.5}}, {"masses", {1.0, 2.0}}, {"half_length", {1.5}}};
  const ScenarioSpec r = scenario_spec_from_json(to_json(s));
  EXPECT_EQ(r.kind, s.kind);
  EXPECT_EQ(r.resolution, 300);
  EXPECT_EQ(r.params, s.params);
  try {
    scenario_spec_from_json(Json::parse(R"({"kind":"sphere"})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
  }
}

TEST(FlowConfigIo, RoundTripAndEpsilonOverH) {
  FlowConfig c;
  c.epsilon = 0.125;
  c.dyadic_level_k = 9;
  c.integrator = Integrator::ExplicitEuler;
  c.maslov_policy = MaslovPolicy::LocalBranch;
  c.kernel = KernelKind::Bump;
  c.reproject_lagrangian = true;
  const FlowConfig r = flow_config_from_json(to_json(c));
  EXPECT_EQ(to_json(r), to_json(c));

  const FlowConfig h = flow_config_from_json(Json::parse(R"({"epsilon_over_h": 4})"), 0.0125);
  EXPECT_DOUBLE_EQ(h.epsilon, 0.05);
  for (const char* bad : {R"({"epsilon": 0})", R"({"epsilon": -0.1})", R"({"epsilon_over_h": 4})",
                          R"({"integrator": "leapfrog"})", R"({"maslov_policy": "ignore"})",
                          R"({"dyadic_level_k": "ten"})", R"({"snapshot_cadence": 0})"}) {
    try {
      flow_config_from_json(Json::parse(bad));
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << bad;
    }
  }
}

TEST(RunConfigIo, DefaultsAndOverrides) {
  const RunConfig r = run_config_from_json(Json::parse(R"({
    "scenario": {"kind": "circle", "resolution": 128},
    "flow": {"epsilon_over_h": 4, "dyadic_level_k": 9},
    "outputs": {"trajectory": "t.jsonl", "svg_dir": "svg", "snapshot_cadence": 5},
    "seed": 7})"));
  EXPECT_EQ(r.scenario.kind, ScenarioKind::Circle);
  EXPECT_EQ(r.outputs.trajectory_path, "t.jsonl");
  EXPECT_EQ(r.outputs.diagnostics_path, "diagnostics.csv");
  EXPECT_EQ(r.outputs.svg_dir, "svg");
  EXPECT_EQ(r.outputs.snapshot_cadence, 5);
  EXPECT_EQ(r.seed, 7);
  EXPECT_EQ(r.flow_json["dyadic_level_k"], 9);
  try {
    run_config_from_json(Json::parse(R"({"flow": {}})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(DiagnosticsCsv, RoundTripsAtFullPrecision) {
  DiagnosticsRow b = sample_row();
  b.time = 0.2;
  b.mass = 0.1 + 0.2;
  const std::string csv = diagnostics_csv({sample_row(), b});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "time,mass,sup_beta,h_l2_normalized,h_l2_raw,support_radius,dissipation,mass_rate,"
            "angle_evolution_residual,energy_integral,omega_residual_max");
  const auto rows = parse_diagnostics_csv(csv);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(row_values(rows[0]), row_values(sample_row()));
  EXPECT_EQ(row_values(rows[1]), row_values(b));
  EXPECT_THROW(parse_diagnostics_csv("time,mass\n1,2\n"), Error);
}

TEST(TrajectoryJsonl, RoundTrip) {
  const Scenario c = make(ScenarioKind::Circle, 64);
  FlowConfig cfg;
  cfg.epsilon = 0.4;
  cfg.dyadic_level_k = 6;
  cfg.t_final = 0.0625;
  cfg.snapshot_cadence = 2;
  cfg.maslov_policy = MaslovPolicy::LocalBranch;
  const Trajectory t = run_flow(c.varifold, cfg, "circle");
  const std::string text = trajectory_jsonl(t);
  const TrajectoryFile f = parse_trajectory_jsonl(text);
  EXPECT_EQ(f.scenario_id, "circle");
  EXPECT_EQ(f.termination_reason, "t_final");
  EXPECT_EQ(f.config, to_json(cfg));
  ASSERT_EQ(f.states.size(), t.states.size());
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    expect_same(t.states[i].varifold, f.states[i].varifold);
    EXPECT_EQ(f.states[i].lift.beta, t.states[i].lift.beta);
    EXPECT_EQ(f.states[i].lift.consistent, t.states[i].lift.consistent);
    EXPECT_EQ(row_values(f.rows[i]), row_values(t.states[i].diagnostics));
  }
  const TrajectoryFile light = parse_trajectory_jsonl(trajectory_jsonl(t, false));
  EXPECT_TRUE(light.states.empty());
  EXPECT_EQ(light.rows.size(), t.states.size());
  EXPECT_EQ(trajectory_jsonl(run_flow(c.varifold, cfg, "circle")), text);
  EXPECT_THROW(parse_trajectory_jsonl("{\"type\":\"snapshot\"\n"), Error);
}

TEST(Svg, DrawsEveryEdgeAndParticle) {
  const Scenario c = make(ScenarioKind::Circle, 32);
  const std::string svg = snapshot_svg(c.varifold, 1.5, 0.25);
  auto count = [&](const std::string& s) {
    std::size_t n = 0;
    for (std::size_t p = svg.find(s); p != std::string::npos; p = svg.find(s, p + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count("<line "), 32u);
  EXPECT_EQ(count("<circle "), 32u);
  EXPECT_NE(svg.find("t = 0.25"), std::string::npos);
  const Scenario t = make(ScenarioKind::ProductTorus, 64);
  EXPECT_THROW(snapshot_svg(t.varifold, 2.0, 0.0), Error);
}

TEST(DecompositionIo, Report) {
  Decomposition d;
  PhaseComponent c;
  c.particle_indices = {0, 1, 2};
  c.phase = 0.5;
  c.mass = 2.0;
  d.components.push_back(c);
  d.residual_mass = 0.01;
  const Json j = to_json(d);
  EXPECT_EQ(j["components"][0]["count"], 3);
  EXPECT_EQ(j["components"][0]["phase"], 0.5);
  EXPECT_EQ(j["residual_mass"], 0.01);
  EXPECT_EQ(j["no_separation"], false);
}
