#pragma once

// Splitting a near-stationary lagrangian varifold into constant-phase pieces
// by slicing level sets of its (mollified) angle modulo pi.

#include "lagflow/curvature.hpp"
#include "lagflow/maslov.hpp"
#include "lagflow/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace lagflow {

struct PhaseComponent {
  std::vector<int> particle_indices;
  double phase = 0.0;  // in [0, pi)
  double mass = 0.0;
  double density_stat = 0.0;
  double orientation_consistency = 1.0;  // fraction of internal mesh edges with coherent orientation
};

struct Decomposition {
  std::vector<PhaseComponent> components;
  double residual_mass = 0.0;
  bool no_separation = false;
};

struct DecompositionOptions {
  double phase_tol = 1e-3;
  double stationarity_tol = 0.05;  // bound on ||H||_{L^2(V/m)}
  double eta = 0.0;                // angle mollification scale; 0 uses the eta -> 0 limit
  double floor_fraction = 1e-3;    // stop when the unassigned mass drops below this share
};

/// Angle reduced to [0, pi).
inline double mod_pi(double a) {
  double r = std::fmod(a, kPi);
  if (r < 0.0) r += kPi;
  return r >= kPi ? 0.0 : r;
}

/// Distance between two angles modulo pi.
inline double phase_distance(double a, double b) {
  const double d = std::abs(mod_pi(a) - mod_pi(b));
  return std::min(d, kPi - d);
}

/// Mass-weighted circular mean modulo pi (through e^{2 i a}).
inline double circular_mean_mod_pi(const std::vector<double>& angles,
                                   const std::vector<double>& weights) {
  std::complex<double> z = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) z += weights[i] * std::polar(1.0, 2.0 * angles[i]);
  return mod_pi(0.5 * std::arg(z));
}

/// Angles modulo pi mollified at every particle: the half-argument of the
/// mollified unit vector e^{2 i psi}.
inline ScalarField mollified_phase_angles(const DiscreteVarifold& v, const ScalarField& angles,
                                          const Mollifier& mollifier) {
  ScalarField c(v.size()), s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    c[i] = std::cos(2.0 * angles[i]);
    s[i] = std::sin(2.0 * angles[i]);
  }
  const MollifiedField fc(v, c, mollifier), fs(v, s, mollifier);
  ScalarField out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = fc.value(v[i].position), y = fs.value(v[i].position);
    out[i] = (x == 0.0 && y == 0.0) ? mod_pi(angles[i]) : mod_pi(0.5 * std::atan2(y, x));
  }
  return out;
}

/// Band estimate of the (n-1)-mass of the level set {angle = s}: mass of the
/// particles whose angle lies within band_width of s (mod pi), divided by
/// twice the band width.
inline double level_set_boundary_mass(const DiscreteVarifold& v, const ScalarField& angles_mod_pi,
                                      double s, double band_width,
                                      const std::vector<char>* active = nullptr) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (active && !(*active)[i]) continue;
    if (phase_distance(angles_mod_pi[i], s) < band_width) m += v[i].measure();
  }
  return m / (2.0 * band_width);
}

/// Same with the angles mollified at scale eta first.
inline double level_set_boundary_mass(const DiscreteVarifold& v, const ScalarField& angles,
                                      double s, const Mollifier& eta, double band_width) {
  return level_set_boundary_mass(v, mollified_phase_angles(v, angles, eta), s, band_width);
}

namespace detail {

inline double largest_circular_gap(std::vector<double> a) {
  if (a.size() < 2) return kPi;
  std::sort(a.begin(), a.end());
  double gap = a.front() + kPi - a.back();
  for (std::size_t i = 1; i < a.size(); ++i) gap = std::max(gap, a[i] - a[i - 1]);
  return gap;
}

inline double orientation_consistency(const DiscreteVarifold& v, const std::vector<char>& in) {
  int total = 0, coherent = 0;
  for (const Edge& e : v.edges()) {
    if (!in[e[0]] || !in[e[1]]) continue;
    ++total;
    const FrameMat a = v[e[0]].frame.orthonormal(), b = v[e[1]].frame.orthonormal();
    if ((a.transpose() * b).determinant() > 0.0) ++coherent;
  }
  return total == 0 ? 1.0 : static_cast<double>(coherent) / total;
}

/// Mass in B(c, r) over omega_n r^n, with c the mass centroid and r half the
/// component's radius about c. Equals 1 for a flat disc centred at c.
inline double density_stat(const DiscreteVarifold& v, const std::vector<int>& idx) {
  Vec c = Vec::Zero(v.ambient_dim());
  double m = 0.0;
  for (int i : idx) {
    c += v[i].measure() * v[i].position;
    m += v[i].measure();
  }
  if (m <= 0.0) return 0.0;
  c /= m;
  double rad = 0.0;
  for (int i : idx) rad = std::max(rad, (v[i].position - c).norm());
  const double r = 0.5 * rad;
  if (r <= 0.0) return 0.0;
  double inside = 0.0;
  for (int i : idx) {
    if ((v[i].position - c).norm() <= r) inside += v[i].measure();
  }
  const int n = v.n();
  const double omega_n = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  return inside / (omega_n * std::pow(r, n));
}

inline PhaseComponent make_component(const DiscreteVarifold& v, const ScalarField& raw,
                                     std::vector<int> idx) {
  PhaseComponent c;
  std::vector<double> a, w;
  std::vector<char> in(v.size(), 0);
  for (int i : idx) {
    a.push_back(raw[i]);
    w.push_back(v[i].measure());
    c.mass += v[i].measure();
    in[i] = 1;
  }
  c.phase = circular_mean_mod_pi(a, w);
  c.density_stat = density_stat(v, idx);
  c.orientation_consistency = orientation_consistency(v, in);
  c.particle_indices = std::move(idx);
  return c;
}

}  // namespace detail

/// Greedy sweep: take the modal angle, cut it out with the half-width that
/// minimizes the level-set mass on both sides, repeat on the remainder.
inline Decomposition phase_decomposition(const DiscreteVarifold& v,
                                         const DecompositionOptions& opt = {}) {
  if (v.empty()) throw Error(ErrorCode::InvalidVarifold, "empty varifold");
  if (!(opt.phase_tol > 0.0) || opt.phase_tol >= kPi / 4.0) {
    throw Error(ErrorCode::ConfigError, "phase_tol must lie in (0, pi/4)");
  }
  const double mass = total_mass(v);
  {
    const CurvatureMethod method = default_curvature_method(v);
    if (method != CurvatureMethod::Frenet) {
      throw Error(ErrorCode::MissingMesh, "stationarity check needs a meshed curve");
    }
    const double lambda = l2_norm(v, mean_curvature_frenet(v)) / std::sqrt(mass);
    if (!(lambda < opt.stationarity_tol)) {
      throw Error(ErrorCode::NotStationary,
                  "||H||_{L2(V/m)} = " + std::to_string(lambda) + " exceeds the stationarity tolerance");
    }
  }
  ScalarField raw = raw_angles(v);
  for (double& a : raw) a = mod_pi(a);
  const ScalarField angles =
      opt.eta > 0.0 ? mollified_phase_angles(v, raw, Mollifier(opt.eta, v.n())) : raw;

  Decomposition out;
  if (detail::largest_circular_gap(raw) <= 2.0 * opt.phase_tol) {
    std::vector<int> all(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) all[i] = static_cast<int>(i);
    out.components.push_back(detail::make_component(v, raw, std::move(all)));
    out.no_separation = true;
    return out;
  }

  std::vector<char> active(v.size(), 1);
  double remaining = mass;
  const double floor = opt.floor_fraction * mass;
  const int bins = std::max(8, static_cast<int>(std::ceil(kPi / opt.phase_tol)));
  const double band = 0.5 * opt.phase_tol;
  while (remaining >= floor) {
    std::vector<double> hist(bins, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (active[i]) hist[std::min(bins - 1, static_cast<int>(angles[i] / kPi * bins))] += v[i].measure();
    }
    const int mode_bin = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    std::vector<double> a, w;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double center = (mode_bin + 0.5) * kPi / bins;
      if (active[i] && phase_distance(angles[i], center) <= kPi / bins) {
        a.push_back(angles[i]);
        w.push_back(v[i].measure());
      }
    }
    const double theta = circular_mean_mod_pi(a, w);

    // Coarea scan: cut levels theta +- delta on a grid of step phase_tol.
    const int steps = static_cast<int>(std::floor((kPi / 2.0 - band) / opt.phase_tol));
    std::vector<double> cost(std::max(steps, 1), 0.0);
    for (int k = 0; k < static_cast<int>(cost.size()); ++k) {
      const double delta = (k + 1) * opt.phase_tol;
      cost[k] = level_set_boundary_mass(v, angles, theta - delta, band, &active) +
                level_set_boundary_mass(v, angles, theta + delta, band, &active);
    }
    const double best = *std::min_element(cost.begin(), cost.end());
    int first = 0;
    while (cost[first] > best) ++first;
    int last = first;
    while (last + 1 < static_cast<int>(cost.size()) && cost[last + 1] <= best) ++last;
    const double delta = ((first + last) / 2 + 1) * opt.phase_tol;

    std::vector<int> idx;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (active[i] && phase_distance(angles[i], theta) < delta) {
        idx.push_back(static_cast<int>(i));
        active[i] = 0;
      }
    }
    if (idx.empty()) break;
    PhaseComponent comp = detail::make_component(v, raw, std::move(idx));
    remaining -= comp.mass;
    out.components.push_back(std::move(comp));
  }
  out.residual_mass = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (active[i]) out.residual_mass += v[i].measure();
  }
  return out;
}

}  // namespace lagflow
