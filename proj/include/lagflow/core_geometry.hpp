#pragma once

// Flat Calabi-Yau linear algebra on R^{2n} = C^n with z_k = x_k + i x_{n+k}.

#include "lagflow/types.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace lagflow {

struct Tolerances {
  double lag = 1e-6;     // |det_C| deviation and omega residual admitted as lagrangian
  double frame = 1e-10;  // orthonormality of a frame after Gram-Schmidt
};

/// The standard complex structure: (Jv)_k = -v_{n+k}, (Jv)_{n+k} = v_k.
inline Vec apply_j(const Vec& v) {
  const Eigen::Index n = v.size() / 2;
  Vec out(v.size());
  out.head(n) = -v.tail(n);
  out.tail(n) = v.head(n);
  return out;
}

inline Mat j_matrix(int n) {
  Mat j = Mat::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    j(k, n + k) = -1.0;
    j(n + k, k) = 1.0;
  }
  return j;
}

/// Left-multiplies a 2n x m matrix by J without forming J.
template <class Derived>
auto apply_j_rows(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  const Eigen::Index n = m.rows() / 2;
  Plain out(m.rows(), m.cols());
  out.topRows(n) = -m.bottomRows(n);
  out.bottomRows(n) = m.topRows(n);
  return out;
}

/// omega(u, v) = <Ju, v>.
inline double omega(const Vec& u, const Vec& v) { return apply_j(u).dot(v); }

/// Deterministic modified Gram-Schmidt in column order. Throws DegenerateFrame
/// if a column loses more than all but 1e-12 of its length.
inline FrameMat gram_schmidt(const FrameMat& in) {
  FrameMat q = in;
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const double original = q.col(k).norm();
    for (Eigen::Index j = 0; j < k; ++j) q.col(k) -= q.col(j).dot(q.col(k)) * q.col(j);
    const double len = q.col(k).norm();
    if (!(original > 0.0) || !(len > 1e-12 * original)) {
      throw Error(ErrorCode::DegenerateFrame, "frame vectors are linearly dependent");
    }
    q.col(k) /= len;
  }
  return q;
}

/// n vectors in R^{2n} spanning an (approximately) lagrangian plane. The frame
/// order carries the orientation.
class LagrangianFrame {
 public:
  LagrangianFrame() = default;
  explicit LagrangianFrame(FrameMat vectors) : vectors_(std::move(vectors)) {
    if (vectors_.rows() != 2 * vectors_.cols() || vectors_.cols() < 1 || vectors_.cols() > kMaxN) {
      throw Error(ErrorCode::DegenerateFrame, "frame must be 2n x n with 1 <= n <= 4");
    }
  }

  /// Single tangent vector in the plane (n = 1).
  static LagrangianFrame from_tangent(double tx, double ty) {
    FrameMat m(2, 1);
    m << tx, ty;
    return LagrangianFrame(m);
  }

  int n() const { return static_cast<int>(vectors_.cols()); }
  int ambient_dim() const { return static_cast<int>(vectors_.rows()); }
  const FrameMat& vectors() const { return vectors_; }
  Vec vector(int k) const { return vectors_.col(k); }

  FrameMat orthonormal() const { return gram_schmidt(vectors_); }

  /// Orthogonal projector onto the spanned plane.
  Mat projector() const {
    const FrameMat e = orthonormal();
    return e * e.transpose();
  }

  /// Same plane, orientation reversed (n = 1 negates, otherwise swaps e_1, e_2).
  LagrangianFrame flipped() const {
    FrameMat m = vectors_;
    if (m.cols() == 1) {
      m = -m;
    } else {
      m.col(0).swap(m.col(1));
    }
    return LagrangianFrame(m);
  }

 private:
  FrameMat vectors_;
};

/// Tangential trace sum_k <M e_k, e_k> over an orthonormal frame.
inline double tangential_trace(const FrameMat& orthonormal, const Mat& m) {
  double tr = 0.0;
  for (Eigen::Index k = 0; k < orthonormal.cols(); ++k) {
    tr += orthonormal.col(k).dot(m * orthonormal.col(k));
  }
  return tr;
}

/// n x n complex matrix whose columns are the frame vectors in complex coordinates.
inline CMat complex_columns(const FrameMat& e) {
  const Eigen::Index n = e.cols();
  CMat a(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) a(k, j) = {e(k, j), e(n + k, j)};
  }
  return a;
}

inline std::complex<double> complex_determinant(const FrameMat& orthonormal) {
  const CMat a = complex_columns(orthonormal);
  if (a.rows() == 1) return a(0, 0);
  return a.determinant();
}

/// max_{i<j} |omega(e_i, e_j)| over the orthonormalized frame.
inline double omega_residual(const LagrangianFrame& frame) {
  const FrameMat e = frame.orthonormal();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < e.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < e.cols(); ++j) {
      worst = std::max(worst, std::abs(omega(e.col(i), e.col(j))));
    }
  }
  return worst;
}

/// Oriented lagrangian angle in (-pi, pi]: e^{i beta} = det_C of the frame.
inline double lagrangian_angle(const LagrangianFrame& frame, const Tolerances& tol = {}) {
  const FrameMat e = frame.orthonormal();
  const std::complex<double> d = complex_determinant(e);
  if (std::abs(std::abs(d) - 1.0) > tol.lag) {
    throw Error(ErrorCode::NonLagrangianFrame,
                "|det_C| = " + std::to_string(std::abs(d)) + " deviates from 1");
  }
  return std::arg(d);
}

struct VectorFieldSample {
  Vec value;
  Mat jacobian;
};

/// delta_X beta = -tr_S D(JX).
inline double beta_first_variation(const LagrangianFrame& frame, const VectorFieldSample& x,
                                   const Tolerances& tol = {}) {
  const FrameMat e = frame.orthonormal();
  if (std::abs(std::abs(complex_determinant(e)) - 1.0) > tol.lag) {
    throw Error(ErrorCode::NonLagrangianFrame, "first variation needs a lagrangian frame");
  }
  const Mat djx = apply_j_rows(x.jacobian);
  return -tangential_trace(e, djx);
}

struct PushForward {
  LagrangianFrame frame;
  double jacobian_factor = 1.0;
};

/// Transports a frame by a linear map: Gram-Schmidt of {dPsi e_k} plus the
/// n-volume of the image parallelepiped of an orthonormal input.
inline PushForward push_forward_frame(const LagrangianFrame& frame, const Mat& d_psi) {
  const FrameMat e = frame.orthonormal();
  const FrameMat image = d_psi * e;
  const Mat gram = image.transpose() * image;
  const double vol2 = gram.determinant();
  const FrameMat q = gram_schmidt(image);
  return {LagrangianFrame(q), std::sqrt(std::max(vol2, 0.0))};
}

/// Nearest orthonormal lagrangian frame with the same complex-determinant
/// phase: the unitary polar factor of the complex column matrix.
inline LagrangianFrame project_lagrangian(const LagrangianFrame& frame) {
  const FrameMat e = frame.orthonormal();
  const Eigen::Index n = e.cols();
  const CMat a = complex_columns(e);
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMat u = svd.matrixU() * svd.matrixV().adjoint();
  FrameMat out(2 * n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      out(k, j) = u(k, j).real();
      out(n + k, j) = u(k, j).imag();
    }
  }
  return LagrangianFrame(out);
}

}  // namespace lagflow
