#pragma once

// Deterministic initial varifolds with analytic ground truth.

#include "lagflow/varifold.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lagflow {

enum class ScenarioKind {
  Circle,
  Ellipse,
  FigureEightTransverse,
  FigureEightTangential,
  SegmentUnion,
  LineUnionPhases,
  ProductTorus,
  GraphLagrangian,
};

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Circle: return "circle";
    case ScenarioKind::Ellipse: return "ellipse";
    case ScenarioKind::FigureEightTransverse: return "figure_eight_transverse";
    case ScenarioKind::FigureEightTangential: return "figure_eight_tangential";
    case ScenarioKind::SegmentUnion: return "segment_union";
    case ScenarioKind::LineUnionPhases: return "line_union_phases";
    case ScenarioKind::ProductTorus: return "product_torus";
    case ScenarioKind::GraphLagrangian: return "graph_lagrangian";
  }
  return "unknown";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  for (ScenarioKind k :
       {ScenarioKind::Circle, ScenarioKind::Ellipse, ScenarioKind::FigureEightTransverse,
        ScenarioKind::FigureEightTangential, ScenarioKind::SegmentUnion,
        ScenarioKind::LineUnionPhases, ScenarioKind::ProductTorus, ScenarioKind::GraphLagrangian}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown scenario kind '" + s + "'");
}

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Circle;
  std::map<std::string, std::vector<double>> params;  // scalars are length-1 lists
  int resolution = 400;

  double param(const std::string& name, double fallback) const {
    auto it = params.find(name);
    if (it == params.end() || it->second.empty()) return fallback;
    return it->second.front();
  }

  std::vector<double> list(const std::string& name, std::vector<double> fallback = {}) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
  }
};

struct ScenarioMetadata {
  double exact_mass = 0.0;
  std::optional<VectorField> exact_curvature;
  std::vector<double> exact_phases;           // mod pi, per component
  std::vector<double> exact_component_masses;
  double support_radius = 0.0;                // max |x| of the exact curve/surface
  std::optional<int> expected_maslov;         // winding of the full loop (n = 1, one loop)
  std::vector<std::vector<int>> lobes;        // open mesh paths
  std::vector<double> lobe_angle_changes;
  bool closed = true;                         // every component is a closed mesh
};

struct Scenario {
  DiscreteVarifold varifold;
  ScenarioMetadata meta;
};

namespace detail {

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline std::vector<Edge> closed_polygon(int start, int count) {
  std::vector<Edge> e;
  for (int k = 0; k < count; ++k) e.push_back({start + k, start + (k + 1) % count});
  return e;
}

inline double quad(const std::function<double(double)>& f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-13, &err);
}

/// Closed planar curve sampled at uniform parameter; weights |gamma'| dt.
struct PlanarCurve {
  std::function<Vec(double)> pos;
  std::function<Vec(double)> d1;
  std::function<Vec(double)> d2;
};

inline Scenario sample_closed_curve(const PlanarCurve& c, int m, double t0 = 0.0) {
  std::vector<Particle> ps;
  VectorField curv;
  const double dt = kTwoPi / m;
  for (int k = 0; k < m; ++k) {
    const double t = t0 + dt * k;
    const Vec p = c.pos(t), v = c.d1(t), a = c.d2(t);
    const double speed = v.norm();
    const double kappa = (v[0] * a[1] - v[1] * a[0]) / (speed * speed * speed);
    const Vec tan = v / speed;
    ps.push_back({p, LagrangianFrame::from_tangent(tan[0], tan[1]), speed * dt, 1});
    curv.push_back(kappa * apply_j(tan));
  }
  Scenario s{DiscreteVarifold(1, std::move(ps), closed_polygon(0, m)), {}};
  s.meta.exact_mass = quad([&](double t) { return c.d1(t).norm(); }, 0.0, kTwoPi);
  s.meta.exact_curvature = std::move(curv);
  return s;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidSpec, what);
}

}  // namespace detail

inline Scenario generate(const ScenarioSpec& spec) {
  using detail::vec2;
  detail::require(spec.resolution >= 16, "resolution must be at least 16");
  const int m = spec.resolution;
  switch (spec.kind) {
    case ScenarioKind::Circle: {
      const double r = spec.param("R", 1.0), cx = spec.param("cx", 0.0), cy = spec.param("cy", 0.0);
      detail::require(r > 0.0, "circle radius must be positive");
      detail::PlanarCurve c{
          [=](double t) { return vec2(cx + r * std::cos(t), cy + r * std::sin(t)); },
          [=](double t) { return vec2(-r * std::sin(t), r * std::cos(t)); },
          [=](double t) { return vec2(-r * std::cos(t), -r * std::sin(t)); }};
      Scenario s = detail::sample_closed_curve(c, m);
      s.meta.exact_mass = kTwoPi * r;
      s.meta.support_radius = std::hypot(cx, cy) + r;
      s.meta.expected_maslov = 1;
      return s;
    }
    case ScenarioKind::Ellipse: {
      const double a = spec.param("a", 2.0), b = spec.param("b", 1.0);
      detail::require(a > 0.0 && b > 0.0, "ellipse axes must be positive");
      detail::PlanarCurve c{[=](double t) { return vec2(a * std::cos(t), b * std::sin(t)); },
                            [=](double t) { return vec2(-a * std::sin(t), b * std::cos(t)); },
                            [=](double t) { return vec2(-a * std::cos(t), -b * std::sin(t)); }};
      Scenario s = detail::sample_closed_curve(c, m);
      s.meta.support_radius = std::max(a, b);
      s.meta.expected_maslov = 1;
      return s;
    }
    case ScenarioKind::FigureEightTransverse: {
      // Lemniscate of Gerono; crossing at the origin at t = pi/2 and 3pi/2.
      detail::require(m % 4 == 0, "figure_eight_transverse resolution must be divisible by 4");
      const double a = spec.param("scale", 1.0);
      detail::require(a > 0.0, "scale must be positive");
      detail::PlanarCurve c{
          [=](double t) { return vec2(a * std::cos(t), a * std::sin(t) * std::cos(t)); },
          [=](double t) { return vec2(-a * std::sin(t), a * std::cos(2.0 * t)); },
          [=](double t) { return vec2(-a * std::cos(t), -2.0 * a * std::sin(2.0 * t)); }};
      Scenario s = detail::sample_closed_curve(c, m);
      s.meta.support_radius = a;
      s.meta.expected_maslov = 0;
      std::vector<int> right, left;
      for (int k = 3 * m / 4; k <= m + m / 4; ++k) right.push_back(k % m);
      for (int k = m / 4; k <= 3 * m / 4; ++k) left.push_back(k);
      s.meta.lobes = {right, left};
      s.meta.lobe_angle_changes = {1.5 * kPi, -1.5 * kPi};
      return s;
    }
    case ScenarioKind::FigureEightTangential: {
      // Two externally tangent circles traversed as one immersed loop:
      // the left one counterclockwise, the right one clockwise.
      detail::require(m % 2 == 0, "figure_eight_tangential resolution must be even");
      const double r = spec.param("r", 0.5);
      detail::require(r > 0.0, "radius must be positive");
      const int half = m / 2;
      const double ds = kTwoPi / half;
      std::vector<Particle> ps;
      VectorField curv;
      for (int k = 0; k < half; ++k) {
        const double t = ds * k;
        const Vec p = vec2(-r + r * std::cos(t), r * std::sin(t));
        ps.push_back({p, LagrangianFrame::from_tangent(-std::sin(t), std::cos(t)), r * ds, 1});
        curv.push_back(-(p - vec2(-r, 0.0)) / (r * r));
      }
      for (int k = 0; k < half; ++k) {
        const double t = ds * k;
        const Vec p = vec2(r - r * std::cos(t), r * std::sin(t));
        ps.push_back({p, LagrangianFrame::from_tangent(std::sin(t), std::cos(t)), r * ds, 1});
        curv.push_back(-(p - vec2(r, 0.0)) / (r * r));
      }
      Scenario s{DiscreteVarifold(1, std::move(ps), detail::closed_polygon(0, m)), {}};
      s.meta.exact_mass = 2.0 * kTwoPi * r;
      s.meta.exact_curvature = std::move(curv);
      s.meta.support_radius = 2.0 * r;
      s.meta.expected_maslov = 0;
      std::vector<int> lobe_a, lobe_b;
      for (int k = 0; k <= half; ++k) lobe_a.push_back(k);
      for (int k = half; k <= m; ++k) lobe_b.push_back(k % m);
      s.meta.lobes = {lobe_a, lobe_b};
      s.meta.lobe_angle_changes = {kTwoPi, -kTwoPi};
      return s;
    }
    case ScenarioKind::SegmentUnion:
    case ScenarioKind::LineUnionPhases: {
      const bool phases = spec.kind == ScenarioKind::LineUnionPhases;
      const std::vector<double> angles = spec.list("angles", {0.0, kPi / 3.0});
      const std::vector<double> lengths =
          phases ? spec.list("masses", std::vector<double>(angles.size(), 1.0))
                 : spec.list("lengths", std::vector<double>(angles.size(), 2.0));
      const std::vector<double> cx = spec.list("cx", std::vector<double>(angles.size(), 0.0));
      const std::vector<double> cy = spec.list("cy", std::vector<double>(angles.size(), 0.0));
      detail::require(!angles.empty() && lengths.size() == angles.size() &&
                          cx.size() == angles.size() && cy.size() == angles.size(),
                      "segment parameter lists must have equal nonzero length");
      double total = 0.0;
      for (double l : lengths) {
        detail::require(l > 0.0, "segment lengths must be positive");
        total += l;
      }
      const double h = total / m;
      std::vector<Particle> ps;
      std::vector<Edge> mesh;
      Scenario s;
      for (std::size_t seg = 0; seg < angles.size(); ++seg) {
        const int count = std::max(2, static_cast<int>(std::lround(lengths[seg] / h)));
        const double w = lengths[seg] / count;
        const double ca = std::cos(angles[seg]), sa = std::sin(angles[seg]);
        const int start = static_cast<int>(ps.size());
        for (int k = 0; k < count; ++k) {
          const double u = -0.5 * lengths[seg] + (k + 0.5) * w;
          ps.push_back({vec2(cx[seg] + u * ca, cy[seg] + u * sa), LagrangianFrame::from_tangent(ca, sa),
                        w, 1});
          if (k > 0) mesh.push_back({start + k - 1, start + k});
        }
        s.meta.exact_phases.push_back(std::fmod(std::fmod(angles[seg], kPi) + kPi, kPi));
        s.meta.exact_component_masses.push_back(lengths[seg]);
        const double ex = std::hypot(cx[seg] + 0.5 * lengths[seg] * ca, cy[seg] + 0.5 * lengths[seg] * sa);
        const double ey = std::hypot(cx[seg] - 0.5 * lengths[seg] * ca, cy[seg] - 0.5 * lengths[seg] * sa);
        s.meta.support_radius = std::max({s.meta.support_radius, ex, ey});
      }
      s.meta.exact_mass = total;
      s.meta.exact_curvature = VectorField(ps.size(), Vec::Zero(2));
      s.meta.closed = false;
      s.varifold = DiscreteVarifold(1, std::move(ps), std::move(mesh));
      return s;
    }
    case ScenarioKind::ProductTorus: {
      const double r1 = spec.param("r1", 1.0), r2 = spec.param("r2", 1.0);
      detail::require(r1 > 0.0 && r2 > 0.0, "torus radii must be positive");
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
      const int m1 = static_cast<int>(spec.param("m1", side));
      const int m2 = static_cast<int>(spec.param("m2", side));
      detail::require(m1 >= 4 && m2 >= 4, "torus needs at least 4 samples per factor");
      const double da = kTwoPi / m1, db = kTwoPi / m2;
      std::vector<Particle> ps;
      std::vector<Edge> mesh;
      VectorField curv;
      auto idx = [&](int i, int j) { return ((i + m1) % m1) * m2 + (j + m2) % m2; };
      for (int i = 0; i < m1; ++i) {
        for (int j = 0; j < m2; ++j) {
          const double a = da * i, b = db * j;
          Vec p(4);
          p << r1 * std::cos(a), r2 * std::cos(b), r1 * std::sin(a), r2 * std::sin(b);
          FrameMat e = FrameMat::Zero(4, 2);
          e(0, 0) = -std::sin(a);
          e(2, 0) = std::cos(a);
          e(1, 1) = -std::sin(b);
          e(3, 1) = std::cos(b);
          ps.push_back({p, LagrangianFrame(e), (r1 * da) * (r2 * db), 1});
          Vec h(4);
          h << -std::cos(a) / r1, -std::cos(b) / r2, -std::sin(a) / r1, -std::sin(b) / r2;
          curv.push_back(h);
          mesh.push_back({idx(i, j), idx(i + 1, j)});
          mesh.push_back({idx(i, j), idx(i, j + 1)});
        }
      }
      Scenario s{DiscreteVarifold(2, std::move(ps), std::move(mesh)), {}};
      s.meta.exact_mass = kTwoPi * r1 * kTwoPi * r2;
      s.meta.exact_curvature = std::move(curv);
      s.meta.support_radius = std::hypot(r1, r2);
      return s;
    }
    case ScenarioKind::GraphLagrangian: {
      // Graph of Du for u = (a11 x1^2 + 2 a12 x1 x2 + a22 x2^2) / 2 over a square grid.
      const double a11 = spec.param("a11", 1.0), a12 = spec.param("a12", 0.0),
                   a22 = spec.param("a22", -1.0), side_len = spec.param("L", 1.0);
      detail::require(side_len > 0.0, "square side must be positive");
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
      Eigen::Matrix2d hess;
      hess << a11, a12, a12, a22;
      const double dx = side_len / side;
      const double area = std::sqrt((Eigen::Matrix2d::Identity() + hess * hess).determinant()) * dx * dx;
      FrameMat e(4, 2);
      e.topRows(2) = Eigen::Matrix2d::Identity();
      e.bottomRows(2) = hess;
      const LagrangianFrame frame(gram_schmidt(e));
      std::vector<Particle> ps;
      std::vector<Edge> mesh;
      for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
          const Eigen::Vector2d x(-0.5 * side_len + (i + 0.5) * dx, -0.5 * side_len + (j + 0.5) * dx);
          const Eigen::Vector2d y = hess * x;
          Vec p(4);
          p << x[0], x[1], y[0], y[1];
          ps.push_back({p, frame, area, 1});
          if (i > 0) mesh.push_back({(i - 1) * side + j, i * side + j});
          if (j > 0) mesh.push_back({i * side + j - 1, i * side + j});
        }
      }
      Scenario s{DiscreteVarifold(2, std::move(ps), std::move(mesh)), {}};
      s.meta.exact_mass = area * side * side;
      s.meta.exact_curvature = VectorField(s.varifold.size(), Vec::Zero(4));
      double rad = 0.0;
      for (const Particle& p : s.varifold.particles()) rad = std::max(rad, p.position.norm());
      s.meta.support_radius = rad;
      s.meta.closed = false;
      return s;
    }
  }
  throw Error(ErrorCode::InvalidSpec, "unhandled scenario kind");
}

struct CatalogEntry {
  ScenarioKind kind;
  const char* params;
  const char* summary;
};

inline std::vector<CatalogEntry> catalog() {
  return {
      {ScenarioKind::Circle, "R=1 cx=0 cy=0", "round circle, n=1, Maslov index 1"},
      {ScenarioKind::Ellipse, "a=2 b=1", "ellipse sampled at uniform parameter, n=1"},
      {ScenarioKind::FigureEightTransverse, "scale=1 (resolution % 4 == 0)",
       "lemniscate of Gerono, transverse double point, Maslov index 0"},
      {ScenarioKind::FigureEightTangential, "r=0.5 (resolution even)",
       "two tangent circles traversed with opposite orientation, Maslov index 0"},
      {ScenarioKind::SegmentUnion, "angles=[..] lengths=[..] cx=[..] cy=[..]",
       "union of straight segments (open meshes)"},
      {ScenarioKind::LineUnionPhases, "angles=[..] masses=[..]",
       "segments through the origin with prescribed phases and masses"},
      {ScenarioKind::ProductTorus, "r1=1 r2=1 m1 m2", "product of two circles in C^2, n=2"},
      {ScenarioKind::GraphLagrangian, "a11=1 a12=0 a22=-1 L=1",
       "graph of the gradient of a quadratic, flat lagrangian plane in C^2"},
  };
}

}  // namespace lagflow
