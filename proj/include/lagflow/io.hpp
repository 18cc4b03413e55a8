#pragma once

// File formats: varifold / scenario / run-config JSON, JSONL trajectories,
// CSV diagnostics, SVG snapshots (n = 1) and decomposition reports.

#include "lagflow/decomp.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/scenarios.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace lagflow {

using Json = nlohmann::json;

// ---------------------------------------------------------------- helpers

namespace detail {

inline Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::IoError, "expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) && !j[key].is_null() ? j[key].get<T>() : fallback;
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + p.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write to '" + p.string() + "' failed");
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::IoError, what + ": " + e.what());
  }
}

// ---------------------------------------------------------------- varifold

inline Json to_json(const DiscreteVarifold& v) {
  Json j;
  j["n"] = v.n();
  j["h_max"] = v.h_max();
  Json ps = Json::array();
  for (const Particle& p : v.particles()) {
    Json frame = Json::array();
    for (int k = 0; k < v.n(); ++k) frame.push_back(detail::vec_to_json(p.frame.vector(k)));
    ps.push_back({{"position", detail::vec_to_json(p.position)},
                  {"frame", frame},
                  {"weight", p.weight},
                  {"multiplicity", p.multiplicity}});
  }
  j["particles"] = ps;
  Json mesh = Json::array();
  for (const Edge& e : v.edges()) mesh.push_back({e[0], e[1]});
  j["mesh"] = mesh;
  return j;
}

inline DiscreteVarifold varifold_from_json(const Json& j) {
  try {
    const int n = j.at("n").get<int>();
    std::vector<Particle> ps;
    for (const Json& p : j.at("particles")) {
      const Json& frame = p.at("frame");
      if (!frame.is_array() || static_cast<int>(frame.size()) != n) {
        throw Error(ErrorCode::IoError, "frame must list n vectors");
      }
      FrameMat e(2 * n, n);
      for (int k = 0; k < n; ++k) {
        const Vec col = detail::vec_from_json(frame[k]);
        if (col.size() != 2 * n) throw Error(ErrorCode::IoError, "frame vector has wrong length");
        e.col(k) = col;
      }
      ps.push_back({detail::vec_from_json(p.at("position")), LagrangianFrame(e),
                    p.at("weight").get<double>(), detail::get_or<int>(p, "multiplicity", 1)});
    }
    std::vector<Edge> mesh;
    if (j.contains("mesh")) {
      for (const Json& e : j["mesh"]) mesh.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    }
    return DiscreteVarifold(n, std::move(ps), std::move(mesh), detail::get_or<double>(j, "h_max", 0.0));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed varifold: ") + e.what());
  }
}

inline DiscreteVarifold read_varifold(const std::filesystem::path& p) {
  return varifold_from_json(parse_json(read_text(p), p.string()));
}

inline void write_varifold(const std::filesystem::path& p, const DiscreteVarifold& v) {
  write_text(p, to_json(v).dump(1) + "\n");
}

// ---------------------------------------------------------------- scenario spec

inline Json to_json(const ScenarioSpec& s) {
  Json params = Json::object();
  for (const auto& [k, vals] : s.params) {
    params[k] = vals.size() == 1 ? Json(vals.front()) : Json(vals);
  }
  return {{"kind", to_string(s.kind)}, {"resolution", s.resolution}, {"params", params}};
}

inline ScenarioSpec scenario_spec_from_json(const Json& j) {
  ScenarioSpec s;
  try {
    s.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    s.resolution = detail::get_or<int>(j, "resolution", s.resolution);
    if (j.contains("params")) {
      for (const auto& [k, val] : j["params"].items()) {
        if (val.is_array()) {
          s.params[k] = val.get<std::vector<double>>();
        } else {
          s.params[k] = {val.get<double>()};
        }
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("malformed scenario spec: ") + e.what());
  }
  return s;
}

inline Json to_json(const ScenarioMetadata& m) {
  Json j;
  j["exact_mass"] = m.exact_mass;
  j["support_radius"] = m.support_radius;
  j["exact_phases"] = m.exact_phases;
  j["exact_component_masses"] = m.exact_component_masses;
  j["expected_maslov"] = m.expected_maslov ? Json(*m.expected_maslov) : Json(nullptr);
  j["lobes"] = m.lobes;
  j["lobe_angle_changes"] = m.lobe_angle_changes;
  j["closed"] = m.closed;
  return j;
}

// ---------------------------------------------------------------- flow config

inline Json to_json(const FlowConfig& c) {
  return {{"epsilon", c.epsilon},
          {"dyadic_level_k", c.dyadic_level_k},
          {"ode_substeps", c.ode_substeps},
          {"t_final", c.t_final},
          {"integrator", to_string(c.integrator)},
          {"relift_each_step", c.relift_each_step},
          {"maslov_policy", to_string(c.maslov_policy)},
          {"regularizer_weight", c.regularizer_weight},
          {"kernel", to_string(c.kernel)},
          {"reproject_lagrangian", c.reproject_lagrangian},
          {"mass_floor_fraction", c.mass_floor_fraction},
          {"snapshot_cadence", c.snapshot_cadence}};
}

/// Reads a flow config. `spacing` resolves "epsilon_over_h" (epsilon as a
/// multiple of the mean particle spacing) when no explicit epsilon is given.
inline FlowConfig flow_config_from_json(const Json& j, double spacing = 0.0) {
  FlowConfig c;
  try {
    if (j.contains("epsilon")) {
      c.epsilon = j["epsilon"].get<double>();
    } else if (j.contains("epsilon_over_h")) {
      if (!(spacing > 0.0)) throw Error(ErrorCode::ConfigError, "epsilon_over_h needs a particle spacing");
      c.epsilon = j["epsilon_over_h"].get<double>() * spacing;
    }
    c.dyadic_level_k = detail::get_or<int>(j, "dyadic_level_k", c.dyadic_level_k);
    c.ode_substeps = detail::get_or<int>(j, "ode_substeps", c.ode_substeps);
    c.t_final = detail::get_or<double>(j, "t_final", c.t_final);
    const std::string integ = detail::get_or<std::string>(j, "integrator", "rk4");
    if (integ == "rk4") c.integrator = Integrator::RK4;
    else if (integ == "euler") c.integrator = Integrator::ExplicitEuler;
    else throw Error(ErrorCode::ConfigError, "integrator must be 'rk4' or 'euler'");
    c.relift_each_step = detail::get_or<bool>(j, "relift_each_step", c.relift_each_step);
    const std::string pol = detail::get_or<std::string>(j, "maslov_policy", "require_zero");
    if (pol == "require_zero") c.maslov_policy = MaslovPolicy::RequireZero;
    else if (pol == "local_branch") c.maslov_policy = MaslovPolicy::LocalBranch;
    else throw Error(ErrorCode::ConfigError, "maslov_policy must be 'require_zero' or 'local_branch'");
    c.regularizer_weight = detail::get_or<double>(j, "regularizer_weight", c.regularizer_weight);
    c.kernel = kernel_kind_from_string(detail::get_or<std::string>(j, "kernel", "wendland"));
    c.reproject_lagrangian = detail::get_or<bool>(j, "reproject_lagrangian", c.reproject_lagrangian);
    c.mass_floor_fraction = detail::get_or<double>(j, "mass_floor_fraction", c.mass_floor_fraction);
    c.snapshot_cadence = detail::get_or<int>(j, "snapshot_cadence", c.snapshot_cadence);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed flow config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- run config

struct OutputConfig {
  std::string trajectory_path = "trajectory.jsonl";
  std::string diagnostics_path = "diagnostics.csv";
  std::string svg_dir;  // empty: no SVG output
  int snapshot_cadence = 1;
  bool include_particles = true;
};

struct RunConfig {
  ScenarioSpec scenario;
  Json flow_json;  // resolved against the generated scenario
  OutputConfig outputs;
  long seed = 0;   // reserved; every algorithm is deterministic
};

inline RunConfig run_config_from_json(const Json& j) {
  RunConfig r;
  try {
    r.scenario = scenario_spec_from_json(j.at("scenario"));
    r.flow_json = j.contains("flow") ? j["flow"] : Json::object();
    if (j.contains("outputs")) {
      const Json& o = j["outputs"];
      r.outputs.trajectory_path = detail::get_or<std::string>(o, "trajectory", r.outputs.trajectory_path);
      r.outputs.diagnostics_path = detail::get_or<std::string>(o, "diagnostics", r.outputs.diagnostics_path);
      r.outputs.svg_dir = detail::get_or<std::string>(o, "svg_dir", r.outputs.svg_dir);
      r.outputs.snapshot_cadence = detail::get_or<int>(o, "snapshot_cadence", r.outputs.snapshot_cadence);
      r.outputs.include_particles = detail::get_or<bool>(o, "include_particles", r.outputs.include_particles);
    }
    r.seed = detail::get_or<long>(j, "seed", 0);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed run config: ") + e.what());
  }
  if (r.outputs.snapshot_cadence < 1) throw Error(ErrorCode::ConfigError, "snapshot_cadence must be >= 1");
  return r;
}

inline RunConfig read_run_config(const std::filesystem::path& p) {
  const std::string text = read_text(p);
  try {
    return run_config_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- diagnostics

inline const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols = {
      "time",        "mass",     "sup_beta",  "h_l2_normalized", "h_l2_raw", "support_radius",
      "dissipation", "mass_rate", "angle_evolution_residual", "energy_integral",
      "omega_residual_max"};
  return cols;
}

inline std::vector<double> row_values(const DiagnosticsRow& r) {
  return {r.time,        r.mass,      r.sup_beta, r.h_l2_normalized, r.h_l2_raw, r.support_radius,
          r.dissipation, r.mass_rate, r.angle_evolution_residual, r.energy_integral,
          r.omega_residual_max};
}

inline DiagnosticsRow row_from_values(const std::vector<double>& v) {
  if (v.size() != diagnostics_columns().size()) throw Error(ErrorCode::IoError, "diagnostics row has wrong width");
  DiagnosticsRow r;
  r.time = v[0];
  r.mass = v[1];
  r.sup_beta = v[2];
  r.h_l2_normalized = v[3];
  r.h_l2_raw = v[4];
  r.support_radius = v[5];
  r.dissipation = v[6];
  r.mass_rate = v[7];
  r.angle_evolution_residual = v[8];
  r.energy_integral = v[9];
  r.omega_residual_max = v[10];
  return r;
}

inline std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows) {
  std::string out;
  const auto& cols = diagnostics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const DiagnosticsRow& r : rows) {
    const auto vals = row_values(r);
    for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? "," : "") + detail::fmt(vals[i]);
    out += "\n";
  }
  return out;
}

inline std::vector<DiagnosticsRow> parse_diagnostics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty diagnostics file");
  std::vector<DiagnosticsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::IoError, "bad number '" + cell + "' in diagnostics");
      }
    }
    rows.push_back(row_from_values(vals));
  }
  return rows;
}

// ---------------------------------------------------------------- trajectory

inline Json row_to_json(const DiagnosticsRow& r) {
  return {{"t", r.time},
          {"mass", r.mass},
          {"sup_beta", r.sup_beta},
          {"lambda", r.h_l2_normalized},
          {"h_l2_raw", r.h_l2_raw},
          {"support_radius", r.support_radius},
          {"dissipation", r.dissipation},
          {"mass_rate", r.mass_rate},
          {"energy_integral", r.energy_integral},
          {"residuals", {{"angle_evolution", r.angle_evolution_residual}, {"omega", r.omega_residual_max}}}};
}

inline DiagnosticsRow row_from_json(const Json& j) {
  DiagnosticsRow r;
  r.time = j.at("t").get<double>();
  r.mass = j.at("mass").get<double>();
  r.sup_beta = j.at("sup_beta").get<double>();
  r.h_l2_normalized = j.at("lambda").get<double>();
  r.h_l2_raw = detail::get_or<double>(j, "h_l2_raw", 0.0);
  r.support_radius = j.at("support_radius").get<double>();
  r.dissipation = j.at("dissipation").get<double>();
  r.mass_rate = detail::get_or<double>(j, "mass_rate", 0.0);
  r.energy_integral = detail::get_or<double>(j, "energy_integral", 0.0);
  if (j.contains("residuals")) {
    r.angle_evolution_residual = detail::get_or<double>(j["residuals"], "angle_evolution", 0.0);
    r.omega_residual_max = detail::get_or<double>(j["residuals"], "omega", 0.0);
  }
  return r;
}

/// JSONL: a header line, one line per snapshot, a footer line.
inline std::string trajectory_jsonl(const Trajectory& t, bool include_particles = true) {
  std::string out;
  out += Json{{"type", "header"}, {"scenario_id", t.scenario_id}, {"config", to_json(t.config)}}.dump() + "\n";
  for (const FlowState& s : t.states) {
    Json j = row_to_json(s.diagnostics);
    j["type"] = "snapshot";
    if (include_particles) {
      j["particles"] = to_json(s.varifold);
      j["beta"] = s.lift.beta;
      j["lift_consistent"] = s.lift.consistent;
    }
    out += j.dump() + "\n";
  }
  out += Json{{"type", "footer"}, {"termination_reason", t.termination_reason}, {"steps", t.rows.size() - 1}}
             .dump() + "\n";
  return out;
}

struct TrajectoryFile {
  std::string scenario_id;
  Json config;
  std::string termination_reason;
  std::vector<DiagnosticsRow> rows;          // one per snapshot line
  std::vector<FlowState> states;             // only when particles were written
};

inline TrajectoryFile parse_trajectory_jsonl(const std::string& text) {
  TrajectoryFile f;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const Json j = parse_json(line, "trajectory line " + std::to_string(lineno));
    const std::string type = detail::get_or<std::string>(j, "type", "snapshot");
    try {
      if (type == "header") {
        f.scenario_id = detail::get_or<std::string>(j, "scenario_id", "");
        f.config = j.value("config", Json::object());
      } else if (type == "footer") {
        f.termination_reason = detail::get_or<std::string>(j, "termination_reason", "");
      } else {
        DiagnosticsRow r = row_from_json(j);
        f.rows.push_back(r);
        if (j.contains("particles")) {
          FlowState s;
          s.varifold = varifold_from_json(j["particles"]);
          s.time = r.time;
          s.diagnostics = r;
          s.lift.beta = j.at("beta").get<std::vector<double>>();
          s.lift.consistent = detail::get_or<bool>(j, "lift_consistent", true);
          f.states.push_back(std::move(s));
        }
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::IoError, "trajectory line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return f;
}

// ---------------------------------------------------------------- SVG

/// Mesh edges of an n = 1 varifold in a fixed square viewport [-extent, extent]^2.
inline std::string snapshot_svg(const DiscreteVarifold& v, double extent, double time) {
  if (v.n() != 1) throw Error(ErrorCode::InvalidVarifold, "SVG snapshots are only drawn for curves");
  const double px = 600.0;
  auto sx = [&](double x) { return detail::fmt(std::round((x + extent) / (2.0 * extent) * px * 100.0) / 100.0); };
  auto sy = [&](double y) { return detail::fmt(std::round((extent - y) / (2.0 * extent) * px * 100.0) / 100.0); };
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n";
  out += "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
  out += "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">t = " + detail::fmt(time) + "</text>\n";
  out += "<g stroke=\"black\" stroke-width=\"1.5\" fill=\"none\">\n";
  for (const Edge& e : v.edges()) {
    const Vec& a = v[e[0]].position;
    const Vec& b = v[e[1]].position;
    out += "<line x1=\"" + sx(a[0]) + "\" y1=\"" + sy(a[1]) + "\" x2=\"" + sx(b[0]) + "\" y2=\"" + sy(b[1]) + "\"/>\n";
  }
  out += "</g>\n<g fill=\"steelblue\">\n";
  for (const Particle& p : v.particles()) {
    out += "<circle cx=\"" + sx(p.position[0]) + "\" cy=\"" + sy(p.position[1]) + "\" r=\"1.2\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

// ---------------------------------------------------------------- decomposition

inline Json to_json(const Decomposition& d) {
  Json comps = Json::array();
  for (const PhaseComponent& c : d.components) {
    comps.push_back({{"phase", c.phase},
                     {"mass", c.mass},
                     {"count", c.particle_indices.size()},
                     {"density_stat", c.density_stat},
                     {"orientation_consistency", c.orientation_consistency}});
  }
  return {{"components", comps}, {"residual_mass", d.residual_mass}, {"no_separation", d.no_separation}};
}

}  // namespace lagflow
