#pragma once

// Scalar lifts of the S^1 lagrangian angle over meshed varifolds and Maslov
// winding of mesh loops.

#include "lagflow/varifold.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace lagflow {

/// Largest admissible raw-angle jump across a mesh edge.
inline constexpr double kMaxEdgeJump = kPi / 2.0;

inline ScalarField raw_angles(const DiscreteVarifold& v, const Tolerances& tol = {}) {
  ScalarField out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = lagrangian_angle(v[i].frame, tol);
  return out;
}

struct AngleLift {
  ScalarField beta;
  std::vector<int> base_indices;  // one per connected component
  int branch_jumps = 0;           // tree edges whose raw difference needed a 2pi correction
  bool consistent = true;         // false if some mesh cycle has nonzero winding
  std::vector<Edge> inconsistent_edges;

  /// Period to hand to mollification: 0 for a global lift, 2pi otherwise.
  double mollification_period() const { return consistent ? 0.0 : kTwoPi; }
};

/// Breadth-first unwrap from the lowest index of every mesh component. If
/// `reference` is given, each base value is placed on the branch nearest the
/// reference value there. Throws UnwrapAmbiguous when an edge jump reaches
/// pi/2; winding cycles are reported through `consistent`.
inline AngleLift lift_angle(const DiscreteVarifold& v, const ScalarField* reference = nullptr,
                            const Tolerances& tol = {}) {
  const ScalarField raw = raw_angles(v, tol);
  for (const Edge& e : v.edges()) {
    if (std::abs(principal_difference(raw[e[0]], raw[e[1]])) >= kMaxEdgeJump) {
      throw Error(ErrorCode::UnwrapAmbiguous, "angle jump across edge (" + std::to_string(e[0]) +
                                                  "," + std::to_string(e[1]) + ") is >= pi/2");
    }
  }
  AngleLift lift;
  lift.beta.assign(v.size(), 0.0);
  std::vector<char> seen(v.size(), 0);
  std::deque<int> queue;
  for (std::size_t base = 0; base < v.size(); ++base) {
    if (seen[base]) continue;
    lift.base_indices.push_back(static_cast<int>(base));
    double b = raw[base];
    if (reference) b += kTwoPi * std::round(((*reference)[base] - b) / kTwoPi);
    lift.beta[base] = b;
    seen[base] = 1;
    queue.push_back(static_cast<int>(base));
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      for (int j : v.neighbors(i)) {
        if (seen[j]) continue;
        const double d = principal_difference(raw[i], raw[j]);
        if (std::abs(raw[j] - raw[i]) > kPi) ++lift.branch_jumps;
        lift.beta[j] = lift.beta[i] + d;
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
  for (const Edge& e : v.edges()) {
    const double mismatch =
        lift.beta[e[1]] - lift.beta[e[0]] - principal_difference(raw[e[0]], raw[e[1]]);
    if (std::abs(mismatch) > 1.0) {
      lift.consistent = false;
      lift.inconsistent_edges.push_back(e);
    }
  }
  return lift;
}

/// Re-derives lift values from current frames, keeping each particle on the
/// branch nearest its previous (transported) value.
inline ScalarField relift_near(const DiscreteVarifold& v, const ScalarField& transported,
                               const Tolerances& tol = {}) {
  ScalarField out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double raw = lagrangian_angle(v[i].frame, tol);
    out[i] = raw + kTwoPi * std::round((transported[i] - raw) / kTwoPi);
  }
  return out;
}

namespace detail {
inline bool adjacent(const DiscreteVarifold& v, int a, int b) {
  for (int x : v.neighbors(a)) {
    if (x == b) return true;
  }
  return false;
}
}  // namespace detail

/// Sum of principal angle differences along an open mesh path.
inline double angle_change(const DiscreteVarifold& v, const std::vector<int>& path,
                           const Tolerances& tol = {}) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if (!detail::adjacent(v, path[k], path[k + 1])) {
      throw Error(ErrorCode::InvalidLoop, "path step is not a mesh edge");
    }
    total += principal_difference(lagrangian_angle(v[path[k]].frame, tol),
                                  lagrangian_angle(v[path[k + 1]].frame, tol));
  }
  return total;
}

/// Winding (1/2pi) sum of principal differences around a closed mesh loop.
inline int maslov_index(const DiscreteVarifold& v, const std::vector<int>& loop,
                        const Tolerances& tol = {}) {
  if (loop.size() < 2) throw Error(ErrorCode::InvalidLoop, "loop needs at least two vertices");
  std::vector<int> closed = loop;
  closed.push_back(loop.front());
  const double w = angle_change(v, closed, tol) / kTwoPi;
  const double rounded = std::round(w);
  if (std::abs(w - rounded) >= 0.05) {
    throw Error(ErrorCode::NonIntegerWinding, "winding " + std::to_string(w) + " is not integral");
  }
  return static_cast<int>(rounded);
}

/// Fundamental cycles of a BFS spanning forest, one per non-tree edge.
inline std::vector<std::vector<int>> cycle_basis(const DiscreteVarifold& v) {
  const int m = static_cast<int>(v.size());
  std::vector<int> parent(m, -1), depth(m, -1);
  std::deque<int> queue;
  for (int root = 0; root < m; ++root) {
    if (depth[root] >= 0) continue;
    depth[root] = 0;
    queue.push_back(root);
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      for (int j : v.neighbors(i)) {
        if (depth[j] >= 0) continue;
        depth[j] = depth[i] + 1;
        parent[j] = i;
        queue.push_back(j);
      }
    }
  }
  std::vector<std::vector<int>> cycles;
  for (const Edge& e : v.edges()) {
    if (parent[e[1]] == e[0] || parent[e[0]] == e[1]) continue;
    std::vector<int> up_a{e[0]}, up_b{e[1]};
    int a = e[0], b = e[1];
    while (a != b) {
      if (depth[a] >= depth[b]) {
        a = parent[a];
        up_a.push_back(a);
      } else {
        b = parent[b];
        up_b.push_back(b);
      }
    }
    // up_a: e0 .. lca, up_b: e1 .. lca. Cycle: e0 -> lca -> e1 (closing edge e1 -> e0).
    std::vector<int> cyc = up_a;
    for (auto it = up_b.rbegin() + 1; it != up_b.rend(); ++it) cyc.push_back(*it);
    cycles.push_back(std::move(cyc));
  }
  return cycles;
}

struct MaslovReport {
  std::vector<int> indices;  // one per basis cycle
  bool zero_maslov = true;
};

/// Maslov index of every fundamental mesh cycle.
inline MaslovReport maslov_on_cycle_basis(const DiscreteVarifold& v, const Tolerances& tol = {}) {
  MaslovReport report;
  for (const auto& cyc : cycle_basis(v)) {
    const int idx = maslov_index(v, cyc, tol);
    report.indices.push_back(idx);
    if (idx != 0) report.zero_maslov = false;
  }
  return report;
}

}  // namespace lagflow
