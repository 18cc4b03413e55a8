#pragma once

// Discrete integer-rectifiable lagrangian varifold: a weighted particle cloud
// with tangent frames, multiplicities and optional mesh adjacency.

#include "lagflow/core_geometry.hpp"

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace lagflow {

struct Particle {
  Vec position;
  LagrangianFrame frame;
  double weight = 0.0;  // n-dimensional area element
  int multiplicity = 1;

  double measure() const { return weight * multiplicity; }
};

using Edge = std::array<int, 2>;

class DiscreteVarifold {
 public:
  DiscreteVarifold() = default;

  /// `h_max <= 0` derives the resolution from the longest mesh edge.
  DiscreteVarifold(int n, std::vector<Particle> particles, std::vector<Edge> mesh = {},
                   double h_max = 0.0)
      : n_(n), particles_(std::move(particles)), edges_(std::move(mesh)), h_max_(h_max) {
    if (n_ < 1 || n_ > kMaxN) throw Error(ErrorCode::InvalidVarifold, "dimension n out of range");
    for (const Particle& p : particles_) {
      if (p.position.size() != 2 * n_ || p.frame.n() != n_) {
        throw Error(ErrorCode::InvalidVarifold, "particle dimension mismatch");
      }
      if (!(p.weight > 0.0) || p.multiplicity < 1 || !p.position.allFinite()) {
        throw Error(ErrorCode::InvalidVarifold, "particle weight/multiplicity/position invalid");
      }
    }
    adjacency_.assign(particles_.size(), {});
    const int m = static_cast<int>(particles_.size());
    double longest = 0.0;
    for (const Edge& e : edges_) {
      if (e[0] < 0 || e[1] < 0 || e[0] >= m || e[1] >= m || e[0] == e[1]) {
        throw Error(ErrorCode::InvalidVarifold, "mesh edge references an invalid index");
      }
      adjacency_[e[0]].push_back(e[1]);
      adjacency_[e[1]].push_back(e[0]);
      longest = std::max(longest, (particles_[e[0]].position - particles_[e[1]].position).norm());
    }
    if (h_max_ <= 0.0) h_max_ = longest > 0.0 ? longest : mean_spacing();
  }

  int n() const { return n_; }
  int ambient_dim() const { return 2 * n_; }
  std::size_t size() const { return particles_.size(); }
  bool empty() const { return particles_.empty(); }

  const std::vector<Particle>& particles() const { return particles_; }
  const Particle& operator[](std::size_t i) const { return particles_[i]; }

  const std::vector<Edge>& edges() const { return edges_; }
  bool has_mesh() const { return !edges_.empty(); }
  const std::vector<int>& neighbors(std::size_t i) const { return adjacency_[i]; }

  double h_max() const { return h_max_; }

  double longest_edge() const {
    double longest = 0.0;
    for (const Edge& e : edges_) {
      longest = std::max(longest, (particles_[e[0]].position - particles_[e[1]].position).norm());
    }
    return longest;
  }

  /// (mass / count)^{1/n}: the typical particle spacing h.
  double mean_spacing() const {
    if (particles_.empty()) return 0.0;
    double mass = 0.0;
    for (const Particle& p : particles_) mass += p.weight;
    return std::pow(mass / static_cast<double>(particles_.size()), 1.0 / n_);
  }

  /// Restriction to the given particles; mesh edges with both ends kept survive.
  DiscreteVarifold subset(const std::vector<int>& indices) const {
    std::vector<int> remap(particles_.size(), -1);
    std::vector<Particle> ps;
    ps.reserve(indices.size());
    for (int i : indices) {
      remap.at(static_cast<std::size_t>(i)) = static_cast<int>(ps.size());
      ps.push_back(particles_[static_cast<std::size_t>(i)]);
    }
    std::vector<Edge> es;
    for (const Edge& e : edges_) {
      if (remap[e[0]] >= 0 && remap[e[1]] >= 0) es.push_back({remap[e[0]], remap[e[1]]});
    }
    return DiscreteVarifold(n_, std::move(ps), std::move(es), h_max_);
  }

 private:
  int n_ = 1;
  std::vector<Particle> particles_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  double h_max_ = 0.0;
};

/// Per-particle scalar field f in L^p(V).
using ScalarField = std::vector<double>;
/// Per-particle ambient vector field.
using VectorField = std::vector<Vec>;

inline double total_mass(const DiscreteVarifold& v) {
  double m = 0.0;
  for (const Particle& p : v.particles()) m += p.measure();
  return m;
}

/// delta V(X) = sum_i w_i theta_i tr_{S_i} DX(x_i). `field(x)` returns a
/// VectorFieldSample with an analytic jacobian.
template <class Field>
double first_variation(const DiscreteVarifold& v, Field&& field) {
  double sum = 0.0;
  for (const Particle& p : v.particles()) {
    const VectorFieldSample s = field(p.position);
    sum += p.measure() * tangential_trace(p.frame.orthonormal(), s.jacobian);
  }
  return sum;
}

/// L^2(V) norm of a vector field.
inline double l2_norm(const DiscreteVarifold& v, const VectorField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i].measure() * f[i].squaredNorm();
  return std::sqrt(s);
}

inline double l2_norm(const DiscreteVarifold& v, const ScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i].measure() * f[i] * f[i];
  return std::sqrt(s);
}

/// Scaled tilt excess r^{-1-n} sum_{|x_j - x_i| < r} w_j theta_j |P_j - P_i|_F^2.
inline double tilt_excess(const DiscreteVarifold& v, std::size_t center, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::EmptyBall, "radius must be positive");
  const Vec& c = v[center].position;
  const Mat pc = v[center].frame.projector();
  double sum = 0.0;
  bool any = false;
  for (const Particle& p : v.particles()) {
    if ((p.position - c).norm() >= r) continue;
    any = true;
    sum += p.measure() * (p.frame.projector() - pc).squaredNorm();
  }
  if (!any) throw Error(ErrorCode::EmptyBall, "no particles within radius");
  return sum * std::pow(r, -1.0 - v.n());
}

/// Discrete curvature vector of the circle through three points, pointing
/// from `b` toward the circumcenter with magnitude 1/R. Zero when collinear.
inline Vec circumcircle_curvature(const Vec& a, const Vec& b, const Vec& c) {
  const Vec u = a - b;
  const Vec w = c - b;
  const double uu = u.squaredNorm();
  const double ww = w.squaredNorm();
  const double uw = u.dot(w);
  // Gram determinant via the Lagrange identity: exact zero for collinear points.
  double det = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (Eigen::Index j = i + 1; j < u.size(); ++j) {
      const double minor = u[i] * w[j] - u[j] * w[i];
      det += minor * minor;
    }
  }
  if (det <= 1e-24 * uu * ww) return Vec::Zero(b.size());
  // circumcenter o = b + alpha u + gamma w with 2<o - b, u> = |u|^2, 2<o - b, w> = |w|^2
  const double alpha = 0.5 * ww * (uu - uw) / det;
  const double gamma = 0.5 * uu * (ww - uw) / det;
  const Vec oc = alpha * u + gamma * w;
  return oc / oc.squaredNorm();
}

/// Frenet mean curvature for n = 1 polygons. Vertices without exactly two
/// mesh neighbours (open ends) get zero curvature.
inline VectorField mean_curvature_frenet(const DiscreteVarifold& v) {
  if (v.n() != 1 || !v.has_mesh()) {
    throw Error(ErrorCode::MissingMesh, "frenet curvature needs an n = 1 polygon mesh");
  }
  VectorField h(v.size(), Vec::Zero(2));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& nb = v.neighbors(i);
    if (nb.size() != 2) continue;
    h[i] = circumcircle_curvature(v[nb[0]].position, v[i].position, v[nb[1]].position);
  }
  return h;
}

/// Tangential gradient of a per-particle field by least squares over mesh
/// neighbours. With `period > 0` neighbour values are unwrapped to the branch
/// nearest the centre value.
inline VectorField mesh_gradient(const DiscreteVarifold& v, const ScalarField& f,
                                 double period = 0.0) {
  if (!v.has_mesh()) throw Error(ErrorCode::MissingMesh, "mesh gradient needs adjacency");
  VectorField out(v.size(), Vec::Zero(v.ambient_dim()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const FrameMat e = v[i].frame.orthonormal();
    const auto& nb = v.neighbors(i);
    const int n = v.n();
    Mat normal = Mat::Zero(n, n);
    Vec rhs = Vec::Zero(n);
    for (int j : nb) {
      const Vec d = e.transpose() * (v[j].position - v[i].position);
      double df = f[j] - f[i];
      if (period > 0.0) df -= period * std::round(df / period);
      normal += d * d.transpose();
      rhs += df * d;
    }
    if (std::abs(normal.determinant()) < 1e-300) continue;
    const Vec g = normal.ldlt().solve(rhs);
    out[i] = e * g;
  }
  return out;
}

}  // namespace lagflow
