#include "lagflow/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>

using namespace lagflow;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "lagflow_cli_test";

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::string& args, const std::string& tag) {
  fs::create_directories(kRoot);
  const fs::path out = kRoot / (tag + ".stdout");
  const fs::path err = kRoot / (tag + ".stderr");
  const std::string cmd =
      std::string("\"") + LAGFLOW_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(out), read_text(err)};
}

fs::path write_config(const std::string& name, const Json& j) {
  const fs::path p = kRoot / name;
  write_text(p, j.dump(2));
  return p;
}

Json circle_config() {
  return Json::parse(R"({
    "scenario": {"kind": "circle", "resolution": 64},
    "flow": {"epsilon_over_h": 4, "dyadic_level_k": 7, "t_final": 0.1, "maslov_policy": "local_branch"},
    "outputs": {"svg_dir": "svg", "snapshot_cadence": 4}
  })");
}

}  // namespace

TEST(Cli, SimulateWritesReadableOutputs) {
  const fs::path cfg = write_config("circle.json", circle_config());
  const fs::path out = kRoot / "sim";
  fs::remove_all(out);
  const CliRun r = cli("simulate --config " + cfg.string() + " --out " + out.string(), "sim");
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(out / "trajectory.jsonl"));
  ASSERT_TRUE(fs::exists(out / "diagnostics.csv"));
  const auto rows = parse_diagnostics_csv(read_text(out / "diagnostics.csv"));
  ASSERT_EQ(rows.size(), 13u);  // t = 0 and 12 steps of 2^-7
  EXPECT_LE(std::abs(rows.back().time - 0.1), 1.0 / 128.0);
  const TrajectoryFile t = parse_trajectory_jsonl(read_text(out / "trajectory.jsonl"));
  EXPECT_EQ(t.termination_reason, "t_final");
  EXPECT_EQ(t.scenario_id, "circle");
  EXPECT_EQ(t.states.size(), 4u);  // steps 0, 4, 8, 12
  EXPECT_EQ(t.states.back().time, rows.back().time);
  std::size_t svgs = 0;
  for (const auto& e : fs::directory_iterator(out / "svg")) svgs += e.path().extension() == ".svg";
  EXPECT_EQ(svgs, t.states.size());
}

TEST(Cli, OutputsAreByteIdentical) {
  const fs::path cfg = write_config("circle_det.json", circle_config());
  for (const char* d : {"det_a", "det_b"}) {
    fs::remove_all(kRoot / d);
    ASSERT_EQ(cli("simulate --quiet --cadence 3 --config " + cfg.string() + " --out " + (kRoot / d).string(), d).code, 0);
  }
  for (const char* f : {"trajectory.jsonl", "diagnostics.csv", "svg/snapshot_00001.svg"}) {
    EXPECT_EQ(read_text(kRoot / "det_a" / f), read_text(kRoot / "det_b" / f)) << f;
  }
}

TEST(Cli, ErrorsHaveDistinctCodesAndRecords) {
  Json bad = circle_config();
  bad["flow"]["epsilon"] = 0.0;
  CliRun r = cli("simulate --config " + write_config("bad_eps.json", bad).string() + " --out " + kRoot.string(), "eps");
  EXPECT_EQ(r.code, 2);
  const Json rec = Json::parse(r.err);
  EXPECT_EQ(rec["error"], "ConfigError");
  EXPECT_EQ(rec["exit_code"], 2);

  Json open = circle_config();
  open["scenario"] = {{"kind", "line_union_phases"}, {"resolution", 100}};
  r = cli("simulate --config " + write_config("open.json", open).string(), "open");
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(Json::parse(r.err)["error"], "InvalidSpec");

  Json maslov = circle_config();
  maslov["flow"].erase("maslov_policy");
  r = cli("simulate --config " + write_config("maslov.json", maslov).string(), "maslov");
  EXPECT_EQ(r.code, 5);
  EXPECT_EQ(Json::parse(r.err)["error"], "InitialNotZeroMaslov");

  write_text(kRoot / "garbled.json", "{ not json");
  r = cli("simulate --config " + (kRoot / "garbled.json").string(), "garbled");
  EXPECT_EQ(r.code, 2);

  r = cli("analyze /nonexistent/file.json", "missing");
  EXPECT_EQ(r.code, 3);

  r = cli("simulate", "usage");
  EXPECT_EQ(r.code, 64);
}

TEST(Cli, FlowAbortIsReportedAfterWritingOutputs) {
  const Json cfg = Json::parse(R"({
    "scenario": {"kind": "figure_eight_transverse", "resolution": 400},
    "flow": {"epsilon_over_h": 4, "dyadic_level_k": 6, "t_final": 0.1}
  })");
  const fs::path out = kRoot / "cfl";
  fs::remove_all(out);
  const CliRun r = cli("simulate --quiet --config " + write_config("cfl.json", cfg).string() + " --out " + out.string(), "cfl");
  EXPECT_EQ(r.code, 7);
  EXPECT_EQ(Json::parse(r.err)["error"], "CflViolation");
  EXPECT_EQ(parse_trajectory_jsonl(read_text(out / "trajectory.jsonl")).termination_reason, "CflViolation");
}

TEST(Cli, ScenariosListAndGenerate) {
  CliRun r = cli("scenarios list", "list");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 8);
  EXPECT_NE(r.out.find("figure_eight_tangential"), std::string::npos);

  const fs::path v = kRoot / "lines.json";
  r = cli("scenarios generate line_union_phases --resolution 600 --param angles=0,0.7853981633974483,1.5707963267948966 "
          "--param masses=1,2,3 --output " + v.string(), "gen");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_varifold(v).size(), 600u);

  r = cli("decompose " + v.string(), "decomp");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json d = Json::parse(r.out);
  EXPECT_EQ(d["components"].size(), 3u);

  r = cli("scenarios generate sphere --output " + v.string(), "badkind");
  EXPECT_EQ(r.code, 4);
}

TEST(Cli, AnalyzeVarifoldAndTrajectory) {
  const fs::path v = kRoot / "ellipse.json";
  ASSERT_EQ(cli("scenarios generate ellipse --resolution 800 --quiet --output " + v.string(), "genell").code, 0);
  CliRun r = cli("analyze " + v.string(), "anv");
  ASSERT_EQ(r.code, 0) << r.err;
  Json rep = Json::parse(r.out);
  EXPECT_NEAR(rep["mass"].get<double>(), 9.688448220547676, 1e-3);
  EXPECT_LT(rep["harvey_lawson_residual"].get<double>(), 0.05);
  EXPECT_EQ(rep["zero_maslov"], false);
  EXPECT_EQ(rep["tilt_excess_profile"].size(), 4u);

  const fs::path out = kRoot / "an";
  fs::remove_all(out);
  ASSERT_EQ(cli("simulate --quiet --config " + write_config("an.json", circle_config()).string() + " --out " + out.string(), "ansim").code, 0);
  const fs::path report = out / "report.json";
  r = cli("analyze --quiet " + (out / "trajectory.jsonl").string() + " --report " + report.string(), "ant");
  ASSERT_EQ(r.code, 0) << r.err;
  rep = parse_json(read_text(report), "report");
  EXPECT_EQ(rep["collapse_check"]["holds"], true);
  EXPECT_EQ(rep["energy_bound_check"]["holds"], true);
  EXPECT_EQ(rep["final"]["n"], 1);
}

TEST(Cli, SweepWritesConvergenceTable) {
  const fs::path out = kRoot / "sweep";
  fs::remove_all(out);
  Json cfg = circle_config();
  cfg["outputs"].erase("svg_dir");
  cfg["flow"]["t_final"] = 0.125;  // dyadic: every run ends at the same time
  const CliRun r = cli("sweep --quiet --config " + write_config("sweep.json", cfg).string() +
                        " --axis dyadic_level --values 8 9 10 11 --out " + out.string(), "sweep");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string table = read_text(out / "sweep.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
  const std::string orders = read_text(out / "convergence.csv");
  EXPECT_EQ(orders.substr(0, orders.find('\n')), "value,mass_order,sup_beta_order,support_radius_order,h_l2_normalized_order");
  // First-order scheme in the macro step: the mass order sits near 1.
  std::istringstream in(orders);
  std::string line;
  std::getline(in, line);
  int checked = 0;
  while (std::getline(in, line)) {
    const double order = std::stod(line.substr(line.find(',') + 1));
    EXPECT_GT(order, 0.85) << line;
    EXPECT_LT(order, 1.15) << line;
    ++checked;
  }
  EXPECT_EQ(checked, 2);
  EXPECT_TRUE(fs::exists(out / "run_3" / "diagnostics.csv"));

  EXPECT_EQ(cli("sweep --config " + write_config("sweep2.json", cfg).string() + " --axis colour --values 1 2", "badaxis").code, 2);
}
