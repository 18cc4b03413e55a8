#pragma once

// The epsilon-flow: over each dyadic macro step the mollified angle is frozen
// and particles follow the hamiltonian vector field J D beta_eps.

#include "lagflow/curvature.hpp"
#include "lagflow/maslov.hpp"
#include "lagflow/mollify.hpp"
#include "lagflow/parallel.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lagflow {

enum class Integrator { ExplicitEuler, RK4 };

/// How run_flow treats inputs whose angle has no global lift.
enum class MaslovPolicy {
  RequireZero,  // refuse to start
  LocalBranch,  // mollify with sources unwrapped to the branch of each evaluation point
};

inline const char* to_string(Integrator i) { return i == Integrator::RK4 ? "rk4" : "euler"; }
inline const char* to_string(MaslovPolicy p) {
  return p == MaslovPolicy::RequireZero ? "require_zero" : "local_branch";
}

struct FlowConfig {
  double epsilon = 0.05;
  int dyadic_level_k = 10;  // macro step 2^-k
  int ode_substeps = 4;
  double t_final = 0.3;
  Integrator integrator = Integrator::RK4;
  bool relift_each_step = false;  // full breadth-first relift (and edge-jump check) after each step
  MaslovPolicy maslov_policy = MaslovPolicy::RequireZero;
  double regularizer_weight = kDefaultRegularizerWeight;
  KernelKind kernel = KernelKind::Wendland;
  bool reproject_lagrangian = false;
  double mass_floor_fraction = 1e-3;
  int snapshot_cadence = 1;

  double dt() const { return std::ldexp(1.0, -dyadic_level_k); }

  /// Number of macro steps: the largest count whose end time does not pass t_final.
  long steps() const { return static_cast<long>(std::floor(t_final / dt() + 1e-9)); }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail("epsilon must be positive");
    if (dyadic_level_k < 0 || dyadic_level_k > 40) fail("dyadic_level_k must lie in [0, 40]");
    if (ode_substeps < 1) fail("ode_substeps must be at least 1");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) fail("t_final must be positive");
    if (!(regularizer_weight > 0.0)) fail("regularizer_weight must be positive");
    if (!(mass_floor_fraction >= 0.0 && mass_floor_fraction < 1.0)) {
      fail("mass_floor_fraction must lie in [0, 1)");
    }
    if (snapshot_cadence < 1) fail("snapshot_cadence must be at least 1");
  }

  Mollifier mollifier(int n) const { return Mollifier(epsilon, n, regularizer_weight, kernel); }
};

struct DiagnosticsRow {
  double time = 0.0;
  double mass = 0.0;
  double sup_beta = 0.0;
  double h_l2_normalized = 0.0;  // ||H||_{L^2(V/m)}
  double h_l2_raw = 0.0;         // ||H||_{L^2(V)}
  double support_radius = 0.0;
  double dissipation = 0.0;      // -int <J D beta_eps, H> d||V||
  double mass_rate = 0.0;        // measured (mass - previous mass) / dt
  double angle_evolution_residual = 0.0;
  double energy_integral = 0.0;  // running trapezoid of ||H||_{L^2}^2
  double omega_residual_max = 0.0;
};

struct FlowState {
  DiscreteVarifold varifold;
  double time = 0.0;
  AngleLift lift;
  DiagnosticsRow diagnostics;
};

struct Trajectory {
  std::vector<FlowState> states;     // snapshots at the configured cadence
  std::vector<DiagnosticsRow> rows;  // one per macro step, including t = 0
  FlowConfig config;
  std::string scenario_id;
  std::string termination_reason;
};

/// x -> J D beta_eps(x) with jacobian J D^2 beta_eps(x), for a frozen lift.
class HamiltonianField {
 public:
  HamiltonianField(const DiscreteVarifold& v, const AngleLift& lift, const Mollifier& mollifier)
      : field_(v, lift.beta, mollifier, lift.mollification_period()) {
    if (lift.beta.size() != v.size()) throw Error(ErrorCode::MissingLift, "lift size mismatch");
  }

  /// `branch_ref` selects the angle branch when the lift is not global.
  VectorFieldSample sample(const Vec& x, std::optional<double> branch_ref = std::nullopt) const {
    const FieldJet j = jet(x, branch_ref, true);
    return {apply_j(j.gradient), apply_j_rows(j.hessian)};
  }

  FieldJet jet(const Vec& x, std::optional<double> branch_ref, bool with_hessian) const {
    return branch_ref ? field_.jet(x, *branch_ref, with_hessian) : field_.jet(x, with_hessian);
  }

  const MollifiedField& mollified_angle() const { return field_; }

 private:
  MollifiedField field_;
};

inline HamiltonianField hamiltonian_field(const FlowState& state, const Mollifier& mollifier) {
  return HamiltonianField(state.varifold, state.lift, mollifier);
}

/// Ambient divergence tr(J D^2 beta_eps); zero up to rounding.
inline double ambient_divergence(const VectorFieldSample& s) { return s.jacobian.trace(); }

namespace detail {

/// Branch reference for particle i: its own angle when the lift is not global.
inline std::optional<double> branch_ref(const AngleLift& lift, std::size_t i) {
  if (lift.consistent) return std::nullopt;
  return lift.beta[i];
}

struct ParticleJets {
  std::vector<FieldJet> jets;
  ScalarField angle_rate;  // tr_S D^2 beta_eps at each particle
};

inline ParticleJets particle_jets(const DiscreteVarifold& v, const AngleLift& lift,
                                  const HamiltonianField& field) {
  ParticleJets out;
  out.jets.resize(v.size());
  out.angle_rate.resize(v.size());
  parallel_for(v.size(), [&](std::size_t i) {
    out.jets[i] = field.jet(v[i].position, branch_ref(lift, i), true);
    const FrameMat e = v[i].frame.orthonormal();
    out.angle_rate[i] = (e.transpose() * out.jets[i].hessian * e).trace();
  });
  return out;
}

inline VectorField curvature_for_diagnostics(const DiscreteVarifold& v, const AngleLift& lift,
                                             const Mollifier& mollifier) {
  const CurvatureMethod m = default_curvature_method(v);
  return mean_curvature_estimate(v, m, &lift, &mollifier);
}

}  // namespace detail

/// Diagnostics of one state. Time-integrated and step-relative fields
/// (energy_integral, mass_rate, angle_evolution_residual) are left at zero.
inline DiagnosticsRow compute_diagnostics(const DiscreteVarifold& v, const AngleLift& lift,
                                          const Mollifier& mollifier, double time) {
  DiagnosticsRow row;
  row.time = time;
  row.mass = total_mass(v);
  for (double b : lift.beta) row.sup_beta = std::max(row.sup_beta, std::abs(b));
  const VectorField h = detail::curvature_for_diagnostics(v, lift, mollifier);
  const HamiltonianField field(v, lift, mollifier);
  double h2 = 0.0, diss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = v[i].measure();
    const Vec x = apply_j(field.jet(v[i].position, detail::branch_ref(lift, i), false).gradient);
    h2 += w * h[i].squaredNorm();
    diss -= w * x.dot(h[i]);
    row.support_radius = std::max(row.support_radius, v[i].position.norm());
    row.omega_residual_max = std::max(row.omega_residual_max, omega_residual(v[i].frame));
  }
  row.h_l2_raw = std::sqrt(h2);
  row.h_l2_normalized = row.mass > 0.0 ? std::sqrt(h2 / row.mass) : 0.0;
  row.dissipation = diss;
  return row;
}

/// Largest |per-particle difference| between tr_S D^2 beta_eps and the first
/// variation of beta along J D beta_eps; zero by J^2 = -1.
inline double angle_rate_identity_gap(const FlowState& state, const Mollifier& mollifier) {
  const HamiltonianField field = hamiltonian_field(state, mollifier);
  const auto pj = detail::particle_jets(state.varifold, state.lift, field);
  double gap = 0.0;
  for (std::size_t i = 0; i < state.varifold.size(); ++i) {
    const VectorFieldSample s{apply_j(pj.jets[i].gradient), apply_j_rows(pj.jets[i].hessian)};
    const double via_variation = beta_first_variation(state.varifold[i].frame, s);
    gap = std::max(gap, std::abs(via_variation - pj.angle_rate[i]));
  }
  return gap;
}

/// L^2(V) norm of (beta_after - beta_before)/dt - tr_S D^2 beta_eps at step
/// start, relative to the L^2 norm of the latter (absolute when that is
/// below 1e-8). Particles keep their indices, so transport is the identity map.
inline double angle_evolution_residual(const FlowState& before, const FlowState& after,
                                       const Mollifier& mollifier) {
  const double dt = after.time - before.time;
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "states are not time-ordered");
  const HamiltonianField field = hamiltonian_field(before, mollifier);
  const auto pj = detail::particle_jets(before.varifold, before.lift, field);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < before.varifold.size(); ++i) {
    const double w = before.varifold[i].measure();
    const double rate = (after.lift.beta[i] - before.lift.beta[i]) / dt;
    num += w * (rate - pj.angle_rate[i]) * (rate - pj.angle_rate[i]);
    den += w * pj.angle_rate[i] * pj.angle_rate[i];
  }
  const double div_norm = std::sqrt(den);
  return div_norm >= 1e-8 ? std::sqrt(num) / (div_norm + 1e-12) : std::sqrt(num);
}

/// One macro step of length 2^-k with the angle frozen at step start.
inline FlowState flow_step(const FlowState& state, const FlowConfig& config,
                           const Mollifier& mollifier) {
  const DiscreteVarifold& v = state.varifold;
  const double dt = config.dt();
  const HamiltonianField field = hamiltonian_field(state, mollifier);
  const auto start = detail::particle_jets(v, state.lift, field);

  double vmax = 0.0;
  for (const FieldJet& j : start.jets) vmax = std::max(vmax, j.gradient.norm());
  if (!(dt * vmax < v.h_max())) {
    throw Error(ErrorCode::CflViolation, "dt * max|J D beta_eps| = " + std::to_string(dt * vmax) +
                                             " exceeds h_max = " + std::to_string(v.h_max()));
  }

  const int dim = v.ambient_dim();
  const double h = dt / config.ode_substeps;
  std::vector<Particle> moved(v.size());
  parallel_for(v.size(), [&](std::size_t i) {
    const std::optional<double> ref = detail::branch_ref(state.lift, i);
    auto rhs = [&](const Vec& x, const Mat& m, Vec& dx, Mat& dm) {
      const VectorFieldSample s = field.sample(x, ref);
      dx = s.value;
      dm = s.jacobian * m;
    };
    Vec x = v[i].position;
    Mat m = Mat::Identity(dim, dim);
    Vec k1, k2, k3, k4;
    Mat l1, l2, l3, l4;
    for (int s = 0; s < config.ode_substeps; ++s) {
      if (config.integrator == Integrator::ExplicitEuler) {
        rhs(x, m, k1, l1);
        x += h * k1;
        m += h * l1;
      } else {
        rhs(x, m, k1, l1);
        rhs(x + 0.5 * h * k1, m + 0.5 * h * l1, k2, l2);
        rhs(x + 0.5 * h * k2, m + 0.5 * h * l2, k3, l3);
        rhs(x + h * k3, m + h * l3, k4, l4);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        m += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
      }
    }
    PushForward pf = push_forward_frame(v[i].frame, m);
    moved[i] = {x, pf.frame, v[i].weight * pf.jacobian_factor, v[i].multiplicity};
  });

  FlowState next;
  next.time = state.time + dt;
  next.varifold = DiscreteVarifold(v.n(), moved, v.edges());
  next.diagnostics = {};
  const ScalarField carried = relift_near(next.varifold, state.lift.beta);
  if (config.relift_each_step) {
    next.lift = lift_angle(next.varifold, &carried);
    // Keep every particle on its carried branch; the breadth-first pass only
    // refreshes the consistency flags and checks edge jumps.
    next.lift.beta = carried;
  } else {
    next.lift = state.lift;
    next.lift.beta = carried;
  }

  DiagnosticsRow row = compute_diagnostics(next.varifold, next.lift, mollifier, next.time);
  if (config.reproject_lagrangian) {
    for (Particle& p : moved) p.frame = project_lagrangian(p.frame);
    next.varifold = DiscreteVarifold(v.n(), std::move(moved), v.edges());
  }
  row.mass_rate = (row.mass - state.diagnostics.mass) / dt;
  const double e0 = state.diagnostics.h_l2_raw, e1 = row.h_l2_raw;
  row.energy_integral = state.diagnostics.energy_integral + 0.5 * dt * (e0 * e0 + e1 * e1);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = v[i].measure();
    const double rate = (next.lift.beta[i] - state.lift.beta[i]) / dt;
    num += w * (rate - start.angle_rate[i]) * (rate - start.angle_rate[i]);
    den += w * start.angle_rate[i] * start.angle_rate[i];
  }
  const double div_norm = std::sqrt(den);
  row.angle_evolution_residual = div_norm >= 1e-8 ? std::sqrt(num) / (div_norm + 1e-12) : std::sqrt(num);
  next.diagnostics = row;
  return next;
}

/// Initial state with lift and diagnostics. Enforces the Maslov policy.
inline FlowState initial_state(const DiscreteVarifold& v, const FlowConfig& config) {
  config.validate();
  if (v.empty()) throw Error(ErrorCode::InvalidVarifold, "empty varifold");
  FlowState s;
  s.varifold = v;
  s.lift = lift_angle(v);
  if (!s.lift.consistent && config.maslov_policy == MaslovPolicy::RequireZero) {
    throw Error(ErrorCode::InitialNotZeroMaslov,
                "angle has no global lift; set maslov_policy to local_branch to flow anyway");
  }
  s.diagnostics = compute_diagnostics(v, s.lift, config.mollifier(v.n()), 0.0);
  return s;
}

/// Iterates flow_step to t_final or the mass floor. Errors after the first
/// state end the trajectory and are recorded as the termination reason.
inline Trajectory run_flow(const DiscreteVarifold& initial, const FlowConfig& config,
                           const std::string& scenario_id = "") {
  Trajectory traj;
  traj.config = config;
  traj.scenario_id = scenario_id;
  FlowState state = initial_state(initial, config);
  const Mollifier mollifier = config.mollifier(initial.n());
  const double floor = config.mass_floor_fraction * state.diagnostics.mass;
  traj.states.push_back(state);
  traj.rows.push_back(state.diagnostics);
  const long steps = config.steps();
  traj.termination_reason = "t_final";
  for (long step = 1; step <= steps; ++step) {
    try {
      state = flow_step(state, config, mollifier);
    } catch (const Error& e) {
      traj.termination_reason = to_string(e.code());
      break;
    }
    traj.rows.push_back(state.diagnostics);
    const bool extinct = state.diagnostics.mass < floor;
    if (step % config.snapshot_cadence == 0 || step == steps || extinct) {
      traj.states.push_back(state);
    }
    if (extinct) {
      traj.termination_reason = "mass_floor";
      break;
    }
  }
  if (traj.states.back().time != traj.rows.back().time) traj.states.push_back(state);
  return traj;
}

struct CollapseReport {
  double initial_radius = 0.0;
  int n = 1;
  double slack = 0.05;
  double max_violation = -std::numeric_limits<double>::infinity();  // max of radius - bound
  bool holds = true;
};

/// Support radius against sqrt(max(R^2 - 2nt, 0)) + slack at every recorded step.
inline CollapseReport collapse_check(const Trajectory& traj, int n, double slack = 0.05,
                                     std::optional<double> initial_radius = std::nullopt) {
  CollapseReport r;
  r.n = n;
  r.slack = slack;
  if (traj.rows.empty()) return r;
  r.initial_radius = initial_radius.value_or(traj.rows.front().support_radius);
  const double r2 = r.initial_radius * r.initial_radius;
  for (const DiagnosticsRow& row : traj.rows) {
    const double bound = std::sqrt(std::max(r2 - 2.0 * n * row.time, 0.0));
    r.max_violation = std::max(r.max_violation, row.support_radius - bound);
  }
  r.holds = r.max_violation <= slack;
  return r;
}

struct EnergyReport {
  double integral = 0.0;
  double alpha = 0.0;
  double bound = 0.0;  // (4 / alpha) mass(0)^2
  bool holds = true;
};

inline EnergyReport energy_bound_check(const Trajectory& traj) {
  EnergyReport r;
  if (traj.rows.empty()) return r;
  r.alpha = std::numeric_limits<double>::infinity();
  for (const DiagnosticsRow& row : traj.rows) r.alpha = std::min(r.alpha, row.mass);
  r.integral = traj.rows.back().energy_integral;
  const double m0 = traj.rows.front().mass;
  r.bound = r.alpha > 0.0 ? 4.0 / r.alpha * m0 * m0 : std::numeric_limits<double>::infinity();
  r.holds = r.integral <= r.bound;
  return r;
}

}  // namespace lagflow
