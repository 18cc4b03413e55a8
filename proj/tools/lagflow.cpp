// lagflow command-line tool: simulate, analyze, decompose, sweep, scenarios.

#include "lagflow/lagflow.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>

namespace fs = std::filesystem;
using namespace lagflow;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kIo = 3,
  kSpec = 4,
  kMaslov = 5,
  kNotStationary = 6,
  kFlowAborted = 7,
  kInput = 8,
  kUsage = 64,
};

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError: return kConfig;
    case ErrorCode::IoError: return kIo;
    case ErrorCode::InvalidSpec: return kSpec;
    case ErrorCode::InitialNotZeroMaslov: return kMaslov;
    case ErrorCode::NotStationary: return kNotStationary;
    case ErrorCode::CflViolation:
    case ErrorCode::UnwrapAmbiguous:
    case ErrorCode::InconsistentLift:
    case ErrorCode::DegenerateFrame:
    case ErrorCode::NonLagrangianFrame: return kFlowAborted;
    default: return kInput;
  }
}

int report_error(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << Json{{"error", code}, {"message", message}, {"exit_code", exit_code}}.dump() << "\n";
  return exit_code;
}

struct Common {
  std::string config;
  std::string out = ".";
  int cadence = 0;
  bool quiet = false;
};

void say(const Common& c, const std::string& s) {
  if (!c.quiet) std::cout << s << "\n";
}

void emit(const Json& report, const std::string& out_file, const Common& c) {
  if (!out_file.empty()) {
    write_text(out_file, report.dump(2) + "\n");
    say(c, "wrote " + out_file);
  } else {
    std::cout << report.dump(2) << "\n";
  }
}

struct Prepared {
  RunConfig run;
  Scenario scenario;
  FlowConfig flow;
};

Prepared prepare(const RunConfig& run, int cadence_override) {
  Prepared p{run, generate(run.scenario), {}};
  if (!p.scenario.meta.closed) {
    throw Error(ErrorCode::InvalidSpec, std::string(to_string(run.scenario.kind)) +
                                            " is not a closed scenario; the flow runs on closed ones only");
  }
  Json flow = run.flow_json;
  if (!flow.contains("epsilon") && !flow.contains("epsilon_over_h")) flow["epsilon_over_h"] = 4.0;
  if (!flow.contains("snapshot_cadence")) flow["snapshot_cadence"] = run.outputs.snapshot_cadence;
  if (cadence_override > 0) flow["snapshot_cadence"] = cadence_override;
  p.flow = flow_config_from_json(flow, p.scenario.varifold.mean_spacing());
  return p;
}

double extent_of(const DiscreteVarifold& v) {
  double r = 0.0;
  for (const Particle& p : v.particles()) r = std::max(r, p.position.cwiseAbs().maxCoeff());
  return 1.1 * std::max(r, 1e-3);
}

void write_outputs(const Prepared& p, const Trajectory& t, const fs::path& out) {
  const OutputConfig& o = p.run.outputs;
  write_text(out / o.trajectory_path, trajectory_jsonl(t, o.include_particles));
  write_text(out / o.diagnostics_path, diagnostics_csv(t.rows));
  if (!o.svg_dir.empty() && p.scenario.varifold.n() == 1) {
    const double extent = extent_of(p.scenario.varifold);
    char name[64];
    for (std::size_t i = 0; i < t.states.size(); ++i) {
      std::snprintf(name, sizeof name, "snapshot_%05zu.svg", i);
      write_text(out / o.svg_dir / name, snapshot_svg(t.states[i].varifold, extent, t.states[i].time));
    }
  }
}

int cmd_simulate(const Common& c) {
  const Prepared p = prepare(read_run_config(c.config), c.cadence);
  const std::string id = to_string(p.run.scenario.kind);
  say(c, "simulating " + id + " (" + std::to_string(p.scenario.varifold.size()) + " particles, eps = " +
             detail::fmt(p.flow.epsilon) + ", dt = 2^-" + std::to_string(p.flow.dyadic_level_k) + ")");
  const Trajectory t = run_flow(p.scenario.varifold, p.flow, id);
  write_outputs(p, t, c.out);
  const DiagnosticsRow& last = t.rows.back();
  say(c, Json{{"termination_reason", t.termination_reason},
              {"steps", t.rows.size() - 1},
              {"t", last.time},
              {"mass", last.mass},
              {"sup_beta", last.sup_beta}}
             .dump());
  if (t.termination_reason == "t_final" || t.termination_reason == "mass_floor") return kOk;
  return report_error(t.termination_reason, "flow stopped at t = " + detail::fmt(last.time), kFlowAborted);
}

// ---------------------------------------------------------------- analyze

Json analyze_varifold(const DiscreteVarifold& v, double eps) {
  Json r;
  r["particles"] = v.size();
  r["n"] = v.n();
  r["mass"] = total_mass(v);
  r["epsilon"] = eps;
  if (v.has_mesh()) {
    const MaslovReport m = maslov_on_cycle_basis(v);
    r["maslov_indices"] = m.indices;
    r["zero_maslov"] = m.zero_maslov;
  }
  if (v.n() == 1 && v.has_mesh()) {
    const AngleLift lift = lift_angle(v);
    const HarveyLawsonResult hl = harvey_lawson_residual(v, lift, Mollifier(eps, 1));
    r["harvey_lawson_residual"] = hl.residual;
    r["harvey_lawson_absolute"] = hl.absolute;
  }
  const double h = v.mean_spacing();
  Json profile = Json::array();
  const std::size_t stride = std::max<std::size_t>(1, v.size() / 64);
  for (double mult : {2.0, 4.0, 8.0, 16.0}) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < v.size(); i += stride) {
      sum += tilt_excess(v, i, mult * h);
      ++count;
    }
    profile.push_back({{"radius", mult * h}, {"mean_tilt_excess", sum / count}});
  }
  r["tilt_excess_profile"] = profile;
  return r;
}

int cmd_analyze(const Common& c, const std::string& input, double eps_over_h, const std::string& out_file) {
  const std::string text = read_text(input);
  const auto first_line = text.substr(0, text.find('\n'));
  Json report;
  const bool is_trajectory = first_line.find("\"type\"") != std::string::npos;
  if (!is_trajectory) {
    const DiscreteVarifold v = varifold_from_json(parse_json(text, input));
    report = analyze_varifold(v, eps_over_h * v.mean_spacing());
  } else {
    const TrajectoryFile f = parse_trajectory_jsonl(text);
    if (f.rows.empty()) throw Error(ErrorCode::IoError, "trajectory has no snapshots");
    Trajectory t;
    t.rows = f.rows;
    report["scenario_id"] = f.scenario_id;
    report["termination_reason"] = f.termination_reason;
    report["snapshots"] = f.rows.size();
    int n = 1;
    if (!f.states.empty()) {
      const DiscreteVarifold& v = f.states.back().varifold;
      n = v.n();
      const double eps = f.config.contains("epsilon") ? f.config["epsilon"].get<double>() : eps_over_h * v.mean_spacing();
      report["final"] = analyze_varifold(v, eps);
    }
    const CollapseReport cr = collapse_check(t, n);
    report["collapse_check"] = {{"initial_radius", cr.initial_radius},
                                {"n", cr.n},
                                {"slack", cr.slack},
                                {"max_violation", cr.max_violation},
                                {"holds", cr.holds}};
    const EnergyReport er = energy_bound_check(t);
    report["energy_bound_check"] = {
        {"integral", er.integral}, {"alpha", er.alpha}, {"bound", er.bound}, {"holds", er.holds}};
  }
  emit(report, out_file, c);
  return kOk;
}

int cmd_decompose(const Common& c, const std::string& input, const DecompositionOptions& opt,
                  const std::string& out_file) {
  const DiscreteVarifold v = read_varifold(input);
  const Decomposition d = phase_decomposition(v, opt);
  emit(to_json(d), out_file, c);
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepResult {
  DiagnosticsRow last;
  std::string reason;
  std::string error;
};

int cmd_sweep(const Common& c, const std::string& axis, const std::vector<double>& values) {
  if (axis != "epsilon" && axis != "dyadic_level" && axis != "resolution") {
    throw Error(ErrorCode::ConfigError, "axis must be epsilon, dyadic_level or resolution");
  }
  if (values.size() < 2) throw Error(ErrorCode::ConfigError, "a sweep needs at least two values");
  const RunConfig base = read_run_config(c.config);
  std::vector<Prepared> runs;
  for (double val : values) {
    RunConfig r = base;
    if (axis == "epsilon") {
      r.flow_json.erase("epsilon_over_h");
      r.flow_json["epsilon"] = val;
    } else if (axis == "dyadic_level") {
      r.flow_json["dyadic_level_k"] = static_cast<int>(val);
    } else {
      r.scenario.resolution = static_cast<int>(val);
    }
    runs.push_back(prepare(r, c.cadence));
  }

  std::vector<SweepResult> results(runs.size());
  std::mutex log_mutex;
  const std::size_t workers = std::min<std::size_t>(runs.size(), static_cast<std::size_t>(worker_count()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < runs.size(); i += workers) {
        try {
          const Trajectory t = run_flow(runs[i].scenario.varifold, runs[i].flow, to_string(runs[i].run.scenario.kind));
          results[i] = {t.rows.back(), t.termination_reason, ""};
          const fs::path dir = fs::path(c.out) / ("run_" + std::to_string(i));
          write_outputs(runs[i], t, dir);
        } catch (const std::exception& e) {
          results[i].error = e.what();
        }
        std::lock_guard<std::mutex> lock(log_mutex);
        say(c, axis + " = " + detail::fmt(values[i]) + ": " +
                   (results[i].error.empty() ? results[i].reason : results[i].error));
      }
    });
  }
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].error.empty()) throw Error(ErrorCode::ConfigError, "sweep run " + std::to_string(i) + ": " + results[i].error);
  }

  // Step size h per value: epsilon itself, 2^-k, or 1 / resolution.
  auto step = [&](double v) {
    if (axis == "epsilon") return v;
    if (axis == "dyadic_level") return std::ldexp(1.0, -static_cast<int>(v));
    return 1.0 / v;
  };
  const std::vector<std::string> quantities = {"mass", "sup_beta", "support_radius", "h_l2_normalized"};
  auto pick = [](const DiagnosticsRow& r, const std::string& q) {
    if (q == "mass") return r.mass;
    if (q == "sup_beta") return r.sup_beta;
    if (q == "support_radius") return r.support_radius;
    return r.h_l2_normalized;
  };

  std::string table = "value,termination_reason";
  for (const auto& col : diagnostics_columns()) table += "," + col;
  table += "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    table += detail::fmt(values[i]) + "," + results[i].reason;
    for (double x : row_values(results[i].last)) table += "," + detail::fmt(x);
    table += "\n";
  }
  write_text(fs::path(c.out) / "sweep.csv", table);

  // Observed order from consecutive differences: log(d_i / d_{i+1}) / log(h_i / h_{i+1}).
  std::string orders = "value";
  for (const auto& q : quantities) orders += "," + q + "_order";
  orders += "\n";
  for (std::size_t i = 0; i + 2 < results.size(); ++i) {
    orders += detail::fmt(values[i + 2]);
    for (const auto& q : quantities) {
      const double d1 = std::abs(pick(results[i + 1].last, q) - pick(results[i].last, q));
      const double d2 = std::abs(pick(results[i + 2].last, q) - pick(results[i + 1].last, q));
      const double ratio = step(values[i + 1]) / step(values[i + 2]);
      const double order = (d1 > 0.0 && d2 > 0.0) ? std::log(d1 / d2) / std::log(ratio)
                                                   : std::numeric_limits<double>::quiet_NaN();
      orders += "," + detail::fmt(order);
    }
    orders += "\n";
  }
  write_text(fs::path(c.out) / "convergence.csv", orders);
  say(c, "wrote " + (fs::path(c.out) / "sweep.csv").string() + " and convergence.csv");
  return kOk;
}

// ---------------------------------------------------------------- scenarios

int cmd_scenarios_list() {
  for (const CatalogEntry& e : catalog()) {
    std::printf("%-26s %-36s %s\n", to_string(e.kind), e.params, e.summary);
  }
  return kOk;
}

int cmd_scenarios_generate(const Common& c, const std::string& kind, int resolution,
                           const std::vector<std::string>& params, const std::string& out_file) {
  ScenarioSpec s;
  s.kind = scenario_kind_from_string(kind);
  s.resolution = resolution;
  for (const std::string& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidSpec, "parameter '" + kv + "' is not key=value");
    std::vector<double> vals;
    std::istringstream in(kv.substr(eq + 1));
    std::string cell;
    while (std::getline(in, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidSpec, "parameter '" + kv + "' has a bad number");
      }
    }
    s.params[kv.substr(0, eq)] = vals;
  }
  const Scenario sc = generate(s);
  write_varifold(out_file, sc.varifold);
  say(c, Json{{"spec", to_json(s)}, {"metadata", to_json(sc.meta)}, {"written", out_file}}.dump());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lagflow: approximate lagrangian mean curvature flow of discrete varifolds"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "run config JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--cadence", common.cadence, "snapshot every N macro steps")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", common.quiet, "suppress progress output");
  };

  auto* simulate = app.add_subcommand("simulate", "run the flow from a config");
  add_common(simulate);

  std::string input, report_file;
  double eps_over_h = 4.0;
  auto* analyze = app.add_subcommand("analyze", "report on a varifold or trajectory file");
  analyze->add_flag("--quiet", common.quiet, "suppress progress output");
  analyze->add_option("input", input, "varifold JSON or trajectory JSONL")->required();
  analyze->add_option("--epsilon-over-h", eps_over_h, "mollifier scale in mean spacings");
  analyze->add_option("--report", report_file, "write the report here instead of stdout");

  DecompositionOptions dopt;
  auto* decompose = app.add_subcommand("decompose", "split a stationary varifold by phase");
  decompose->add_flag("--quiet", common.quiet, "suppress progress output");
  decompose->add_option("input", input, "varifold JSON")->required();
  decompose->add_option("--phase-tol", dopt.phase_tol, "phase resolution in radians");
  decompose->add_option("--eta", dopt.eta, "angle mollification scale (0: none)");
  decompose->add_option("--stationarity-tol", dopt.stationarity_tol, "bound on ||H||_{L2(V/m)}");
  decompose->add_option("--report", report_file, "write the report here instead of stdout");

  std::string axis;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "convergence table over epsilon, dyadic level or resolution");
  add_common(sweep);
  sweep->add_option("--axis", axis, "epsilon | dyadic_level | resolution")->required();
  sweep->add_option("--values", values, "values along the axis")->required();

  auto* scenarios = app.add_subcommand("scenarios", "scenario catalog");
  scenarios->require_subcommand(1);
  auto* list = scenarios->add_subcommand("list", "print the catalog");
  std::string kind;
  int resolution = 400;
  std::vector<std::string> params;
  auto* gen = scenarios->add_subcommand("generate", "write a scenario varifold");
  gen->add_option("kind", kind, "scenario kind")->required();
  gen->add_option("--resolution", resolution, "particle count");
  gen->add_option("--param", params, "key=v1[,v2...]");
  gen->add_option("--output", report_file, "varifold JSON path")->required();
  gen->add_flag("--quiet", common.quiet, "suppress the metadata echo");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error("UsageError", e.what(), kUsage);
  }

  try {
    if (*simulate) return cmd_simulate(common);
    if (*analyze) return cmd_analyze(common, input, eps_over_h, report_file);
    if (*decompose) return cmd_decompose(common, input, dopt, report_file);
    if (*sweep) return cmd_sweep(common, axis, values);
    if (*list) return cmd_scenarios_list();
    if (*gen) return cmd_scenarios_generate(common, kind, resolution, params, report_file);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report_error("Unexpected", e.what(), kUnexpected);
  }
  return kUnexpected;
}
