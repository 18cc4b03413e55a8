#pragma once

// Compactly supported radial mollifiers phi_eps(x) = C eps^{-n} g(|x| / eps)
// and mollification of per-particle fields with respect to a discrete
// varifold measure:
//
//   f_eps(x) = sum_j w_j f_j phi_eps(x - y_j) / (sum_j w_j phi_eps(x - y_j) + reg),
//   reg = lambda * eps * |V|.
//
// Two profiles are provided. Bump is g(t) = exp(1/(t^2-1)). Wendland is
// g(t) = (1-t)^{n+3} ((n+3) t + 1), a C^2 function that is positive definite
// on R^{2n+1}, so every kernel matrix it induces on a point set in R^{2n} is
// positive semidefinite.

#include "lagflow/spatial_hash.hpp"
#include "lagflow/varifold.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <string>

namespace lagflow {

enum class KernelKind { Wendland, Bump };

inline const char* to_string(KernelKind k) { return k == KernelKind::Bump ? "bump" : "wendland"; }

inline KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "bump") return KernelKind::Bump;
  if (s == "wendland") return KernelKind::Wendland;
  throw Error(ErrorCode::ConfigError, "unknown kernel '" + s + "'");
}

namespace kernel {

inline int wendland_power(int n) { return n + 3; }

/// g(t) for t >= 0; zero outside [0, 1).
inline double profile(KernelKind kind, int n, double t) {
  if (t >= 1.0 || t <= -1.0) return 0.0;
  if (kind == KernelKind::Bump) return std::exp(1.0 / (t * t - 1.0));
  const int p = wendland_power(n);
  t = std::abs(t);
  return std::pow(1.0 - t, p) * (p * t + 1.0);
}

/// a(t) = g'(t) / t, finite at t = 0.
inline double profile_d1_over_t(KernelKind kind, int n, double t) {
  if (t >= 1.0) return 0.0;
  if (kind == KernelKind::Bump) {
    const double q = t * t - 1.0;
    return -2.0 * std::exp(1.0 / q) / (q * q);
  }
  const int p = wendland_power(n);
  return -static_cast<double>(p) * (p + 1) * std::pow(1.0 - t, p - 1);
}

/// b(t) = a'(t) / t, so that D^2 phi = C eps^{-n-2} (a I + b eps^{-2} d d^T).
/// The Wendland term grows like 1/t near 0 while d d^T shrinks like t^2; at
/// t = 0 exactly the product is taken as 0.
inline double profile_d2_term(KernelKind kind, int n, double t) {
  if (t >= 1.0) return 0.0;
  if (kind == KernelKind::Bump) {
    const double q = t * t - 1.0;
    const double q2 = q * q;
    return 4.0 * std::exp(1.0 / q) * (1.0 + 2.0 * q) / (q2 * q2);
  }
  if (t <= 0.0) return 0.0;
  const int p = wendland_power(n);
  return static_cast<double>(p) * (p + 1) * (p - 1) * std::pow(1.0 - t, p - 2) / t;
}

/// sup_t |g'(t)|, found on a fine grid refined by golden-section search.
inline double profile_derivative_sup(KernelKind kind, int n) {
  auto dg = [&](double t) { return std::abs(t * profile_d1_over_t(kind, n, t)); };
  double best_t = 0.0;
  double best = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double t = i / 1000.0;
    if (dg(t) > best) { best = dg(t); best_t = t; }
  }
  double lo = best_t - 1e-3, hi = best_t + 1e-3;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it) {
    const double a = hi - gr * (hi - lo);
    const double b = lo + gr * (hi - lo);
    if (dg(a) > dg(b)) hi = b; else lo = a;
  }
  return std::max(best, dg(0.5 * (lo + hi)));
}

/// Surface area of the unit sphere S^{n-1} in R^n.
inline double sphere_area(int n) {
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// int_{R^n} g(|t|) dt by adaptive Gauss-Kronrod on the radial profile.
inline double profile_integral(KernelKind kind, int n) {
  auto radial = [&](double r) { return std::pow(r, n - 1) * profile(kind, n, r); };
  double err = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(radial, 0.0, 1.0, 20, 1e-13, &err);
  return sphere_area(n) * integral;
}

}  // namespace kernel

/// C with int_{R^n} phi_eps = 1, cached per profile and dimension.
inline double normalization_constant(int n, KernelKind kind = KernelKind::Bump) {
  if (n < 1 || n > kMaxAmbient) throw Error(ErrorCode::ConfigError, "mollifier dimension out of range");
  static std::array<std::array<double, kMaxAmbient + 1>, 2> cache{};
  static std::once_flag once;
  std::call_once(once, [] {
    for (int k = 1; k <= kMaxAmbient; ++k) {
      cache[0][k] = 1.0 / kernel::profile_integral(KernelKind::Wendland, k);
      cache[1][k] = 1.0 / kernel::profile_integral(KernelKind::Bump, k);
    }
  });
  return cache[kind == KernelKind::Bump ? 1 : 0][n];
}

/// Weight lambda of the eps*|V| regularizer used unless configured otherwise.
inline constexpr double kDefaultRegularizerWeight = 1e-3;

class Mollifier {
 public:
  Mollifier(double epsilon, int n, double regularizer_weight = kDefaultRegularizerWeight,
            KernelKind kind = KernelKind::Wendland)
      : epsilon_(epsilon), n_(n), regularizer_weight_(regularizer_weight), kind_(kind) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw Error(ErrorCode::ConfigError, "mollifier epsilon must be positive");
    }
    if (!(regularizer_weight > 0.0)) {
      throw Error(ErrorCode::ConfigError, "regularizer weight must be positive");
    }
    norm_const_ = normalization_constant(n, kind);
  }

  double epsilon() const { return epsilon_; }
  int n() const { return n_; }
  double norm_const() const { return norm_const_; }
  double regularizer_weight() const { return regularizer_weight_; }
  double support_radius() const { return epsilon_; }
  KernelKind kind() const { return kind_; }

  double profile(double t) const { return kernel::profile(kind_, n_, t); }
  double profile_d1_over_t(double t) const { return kernel::profile_d1_over_t(kind_, n_, t); }
  double profile_d2_term(double t) const { return kernel::profile_d2_term(kind_, n_, t); }

  double phi(double r) const {
    return norm_const_ * std::pow(epsilon_, -n_) * profile(r / epsilon_);
  }

  /// The denominator term lambda * eps * |V|.
  double regularizer(double mass) const { return regularizer_weight_ * epsilon_ * mass; }

  /// int_{R^n} phi_eps by radial quadrature (should be 1).
  double kernel_integral() const {
    auto radial = [this](double r) { return std::pow(r, n_ - 1) * phi(r); };
    double err = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        radial, 0.0, epsilon_, 20, 1e-13, &err);
    return kernel::sphere_area(n_) * integral;
  }

  /// C' with |D f_eps| <= C' eps^{-n-2} max|f| for every f and every x.
  double gradient_bound_constant() const {
    return 2.0 * norm_const_ * kernel::profile_derivative_sup(kind_, n_) / regularizer_weight_;
  }

 private:
  double epsilon_;
  int n_;
  double regularizer_weight_;
  KernelKind kind_;
  double norm_const_ = 1.0;
};

/// Value, gradient and hessian of a mollified field at one point.
struct FieldJet {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
  double kernel_mass = 0.0;  // sum_j w_j phi_eps(x - y_j)
  int support_count = 0;
};

/// A per-particle scalar field mollified along a varifold. Sources are frozen
/// at construction. With `period > 0` values are angles: every evaluation
/// unwraps source values to the branch nearest a reference value r and
/// mollifies the offsets, f_eps = r + sum w phi (f_j - r) / (sum w phi + reg),
/// so the result does not depend on which branch r sits on.
class MollifiedField {
 public:
  MollifiedField(const DiscreteVarifold& v, ScalarField values, const Mollifier& mollifier,
                 double period = 0.0)
      : mollifier_(mollifier), values_(std::move(values)), period_(period), dim_(v.ambient_dim()) {
    if (values_.size() != v.size()) throw Error(ErrorCode::InvalidVarifold, "field size mismatch");
    if (mollifier.n() != v.n()) throw Error(ErrorCode::ConfigError, "mollifier dimension mismatch");
    positions_.reserve(v.size());
    weights_.reserve(v.size());
    for (const Particle& p : v.particles()) {
      positions_.push_back(p.position);
      weights_.push_back(p.measure());
    }
    regularizer_ = mollifier.regularizer(total_mass(v));
    hash_ = SpatialHash(positions_, mollifier.epsilon());
  }

  const Mollifier& mollifier() const { return mollifier_; }
  double regularizer() const { return regularizer_; }
  double period() const { return period_; }
  const ScalarField& values() const { return values_; }

  double value(const Vec& x) const { return jet(x, false).value; }
  Vec gradient(const Vec& x) const { return jet(x, false).gradient; }

  FieldJet jet(const Vec& x, bool with_hessian = true) const {
    return evaluate(x, period_ > 0.0 ? nearest_value(x) : std::nullopt, with_hessian);
  }

  /// Evaluation with an explicit branch reference for angle fields.
  FieldJet jet(const Vec& x, double branch_ref, bool with_hessian) const {
    return evaluate(x, period_ > 0.0 ? std::optional<double>(branch_ref) : std::nullopt,
                    with_hessian);
  }

  /// Source value j unwrapped to the branch nearest `ref`.
  double unwrapped(std::size_t j, std::optional<double> ref) const {
    if (!ref) return values_[j];
    return values_[j] + period_ * std::round((*ref - values_[j]) / period_);
  }

  template <class F>
  void for_each_source(const Vec& x, F&& f) const {
    const double eps = mollifier_.epsilon();
    hash_.for_each_candidate(x, eps, [&](int j) {
      const double r = (x - positions_[j]).norm();
      if (r < eps) f(static_cast<std::size_t>(j), r);
    });
  }

  /// Mollifies an arbitrary vector-valued per-particle quantity with the
  /// same kernel and denominator. `shift(j)` adds a per-source correction.
  template <class Values>
  Vec mollify_vectors(const Vec& x, const Values& vals) const {
    Vec num = Vec::Zero(dim_);
    double s = 0.0;
    for_each_source(x, [&](std::size_t j, double r) {
      const double wphi = weights_[j] * mollifier_.phi(r);
      s += wphi;
      num += wphi * vals(j);
    });
    return num / (s + regularizer_);
  }

 private:
  std::optional<double> nearest_value(const Vec& x) const {
    double best = std::numeric_limits<double>::infinity();
    std::optional<double> ref;
    for_each_source(x, [&](std::size_t j, double r) {
      if (r < best) { best = r; ref = values_[j]; }
    });
    return ref;
  }

  FieldJet evaluate(const Vec& x, std::optional<double> ref, bool with_hessian) const {
    const double eps = mollifier_.epsilon();
    const int n = mollifier_.n();
    const double c0 = mollifier_.norm_const() * std::pow(eps, -n);
    const double c1 = c0 / (eps * eps);
    const double inv_eps2 = 1.0 / (eps * eps);

    double s = 0.0, f = 0.0;
    Vec gs = Vec::Zero(dim_), gf = Vec::Zero(dim_);
    double as = 0.0, af = 0.0;
    Mat ms, mf;
    if (with_hessian) {
      ms = Mat::Zero(dim_, dim_);
      mf = Mat::Zero(dim_, dim_);
    }
    int count = 0;
    for_each_source(x, [&](std::size_t j, double r) {
      const double t = r / eps;
      const double w = weights_[j];
      const double fj = ref ? unwrapped(j, ref) - *ref : values_[j];
      const Vec d = x - positions_[j];
      const double phi = c0 * mollifier_.profile(t);
      const double a = c1 * mollifier_.profile_d1_over_t(t);
      s += w * phi;
      f += w * fj * phi;
      gs += (w * a) * d;
      gf += (w * fj * a) * d;
      if (with_hessian) {
        const double b = c1 * inv_eps2 * mollifier_.profile_d2_term(t);
        as += w * a;
        af += w * fj * a;
        ms.noalias() += (w * b) * d * d.transpose();
        mf.noalias() += (w * fj * b) * d * d.transpose();
      }
      ++count;
    });

    FieldJet out;
    const double den = s + regularizer_;
    out.kernel_mass = s;
    out.support_count = count;
    out.value = f / den;
    out.gradient = (gf - out.value * gs) / den;
    if (with_hessian) {
      Mat hs = ms;
      Mat hf = mf;
      hs.diagonal().array() += as;
      hf.diagonal().array() += af;
      out.hessian = (hf - out.gradient * gs.transpose() - gs * out.gradient.transpose() -
                     out.value * hs) / den;
    }
    if (ref) out.value += *ref;
    return out;
  }

  Mollifier mollifier_;
  ScalarField values_;
  double period_;
  int dim_;
  std::vector<Vec> positions_;
  std::vector<double> weights_;
  double regularizer_ = 0.0;
  SpatialHash hash_;
};

/// f_eps(x) for a scalar field on V.
inline double mollify_scalar(const ScalarField& f, const DiscreteVarifold& v,
                             const Mollifier& mollifier, const Vec& x) {
  return MollifiedField(v, f, mollifier).value(x);
}

/// D f_eps(x): exact derivative of the discrete quotient.
inline Vec mollify_gradient(const ScalarField& f, const DiscreteVarifold& v,
                            const Mollifier& mollifier, const Vec& x) {
  return MollifiedField(v, f, mollifier).gradient(x);
}

/// Tangential part of D f_eps at every particle.
inline VectorField tangential_mollified_gradient(const DiscreteVarifold& v,
                                                 const MollifiedField& field) {
  VectorField out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec g = field.period() > 0.0
                      ? field.jet(v[i].position, field.values()[i], false).gradient
                      : field.jet(v[i].position, false).gradient;
    out[i] = v[i].frame.projector() * g;
  }
  return out;
}

struct ErrorDecomposition {
  Vec grad_beta;  // D beta_eps(x)
  Vec b_eps;      // mollified weak derivative
  Vec h_eps;      // mollified mean curvature
  double beta_eps = 0.0;
  Vec error;      // E = D beta_eps - B_eps + beta_eps H_eps
  double bound_value = 0.0;  // eps^{-2} int_{B(x,eps)} |S - T_x|^2 dV / int phi dV (c_1 = 1)
};

/// Splits D beta_eps at particle `index` into B_eps - beta_eps H_eps + E.
/// For angle fields (`period > 0`) the identity is applied to the offsets
/// beta_j' - r from the particle's own value r, whose weak derivatives are
/// B_j + (beta_j' - r - beta_j) H_j.
inline ErrorDecomposition beta_epsilon_error_decomposition(const DiscreteVarifold& v,
                                                           const ScalarField& beta,
                                                           const VectorField& b_hat,
                                                           const VectorField& h_hat,
                                                           const Mollifier& mollifier,
                                                           std::size_t index,
                                                           double period = 0.0) {
  const MollifiedField field(v, beta, mollifier, period);
  const Vec& x = v[index].position;
  const std::optional<double> ref =
      period > 0.0 ? std::optional<double>(beta[index]) : std::nullopt;
  const FieldJet j = ref ? field.jet(x, *ref, false) : field.jet(x, false);

  ErrorDecomposition out;
  out.grad_beta = j.gradient;
  const double r = ref.value_or(0.0);
  out.beta_eps = j.value - r;
  out.b_eps = field.mollify_vectors(x, [&](std::size_t s) -> Vec {
    return b_hat[s] + (field.unwrapped(s, ref) - r - beta[s]) * h_hat[s];
  });
  out.h_eps = field.mollify_vectors(x, [&](std::size_t s) -> Vec { return h_hat[s]; });
  out.error = out.grad_beta - out.b_eps + out.beta_eps * out.h_eps;

  const Mat tx = v[index].frame.projector();
  double tilt = 0.0;
  field.for_each_source(x, [&](std::size_t s, double) {
    tilt += v[s].measure() * (v[s].frame.projector() - tx).squaredNorm();
  });
  const double eps = mollifier.epsilon();
  out.bound_value = j.kernel_mass > 0.0 ? tilt / (eps * eps * j.kernel_mass) : 0.0;
  return out;
}

}  // namespace lagflow
