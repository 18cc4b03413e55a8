#pragma once

// Mean curvature estimators, weak derivatives along V, and the
// Harvey-Lawson residual |grad beta + J H| / |H|.

#include "lagflow/maslov.hpp"
#include "lagflow/mollify.hpp"

#include <optional>

namespace lagflow {

enum class CurvatureMethod { Frenet, AngleGradient };

/// H_i = J (tangential part of D beta_eps)(x_i).
inline VectorField mean_curvature_angle_gradient(const DiscreteVarifold& v, const AngleLift& lift,
                                                 const Mollifier& mollifier) {
  if (lift.beta.size() != v.size()) throw Error(ErrorCode::MissingLift, "lift size mismatch");
  const MollifiedField field(v, lift.beta, mollifier, lift.mollification_period());
  VectorField grad = tangential_mollified_gradient(v, field);
  for (Vec& g : grad) g = apply_j(g);
  return grad;
}

inline VectorField mean_curvature_estimate(const DiscreteVarifold& v, CurvatureMethod method,
                                           const AngleLift* lift = nullptr,
                                           const Mollifier* mollifier = nullptr) {
  if (method == CurvatureMethod::Frenet) return mean_curvature_frenet(v);
  if (lift == nullptr || mollifier == nullptr) {
    throw Error(ErrorCode::MissingLift, "angle-gradient curvature needs a lift and a mollifier");
  }
  return mean_curvature_angle_gradient(v, *lift, *mollifier);
}

/// Frenet when n = 1 and meshed, angle-gradient otherwise.
inline CurvatureMethod default_curvature_method(const DiscreteVarifold& v) {
  return v.n() == 1 && v.has_mesh() ? CurvatureMethod::Frenet : CurvatureMethod::AngleGradient;
}

/// F_i = (tangential part of D f_eps)(x_i) + f_i H_i.
inline VectorField weak_derivative_estimate(const DiscreteVarifold& v, const ScalarField& f,
                                            const Mollifier& mollifier, const VectorField& h,
                                            double period = 0.0) {
  const MollifiedField field(v, f, mollifier, period);
  VectorField out = tangential_mollified_gradient(v, field);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] += f[i] * h[i];
  return out;
}

struct HarveyLawsonResult {
  double residual = 0.0;
  bool absolute = false;  // set when |H| vanishes and the residual is not normalized
};

/// |P Dbeta_eps + J H|_{L^2} / |H|_{L^2} with an independent curvature field
/// (Frenet by default).
inline HarveyLawsonResult harvey_lawson_residual(const DiscreteVarifold& v, const AngleLift& lift,
                                                 const Mollifier& mollifier,
                                                 std::optional<VectorField> h = std::nullopt) {
  const VectorField hh = h ? std::move(*h) : mean_curvature_frenet(v);
  const MollifiedField field(v, lift.beta, mollifier, lift.mollification_period());
  const VectorField grad = tangential_mollified_gradient(v, field);
  VectorField defect(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) defect[i] = grad[i] + apply_j(hh[i]);
  const double num = l2_norm(v, defect);
  const double den = l2_norm(v, hh);
  if (den < 1e-12) return {num, true};
  return {num / den, false};
}

}  // namespace lagflow
