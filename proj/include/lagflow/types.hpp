#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace lagflow {

/// Largest supported complex dimension n; the ambient space is R^{2n}.
inline constexpr int kMaxN = 4;
inline constexpr int kMaxAmbient = 2 * kMaxN;

// Dynamic-size but stack-allocated Eigen types. Keeps kernel loops free of
// heap traffic while n is a runtime quantity read from input files.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;
using FrameMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxN>;
using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxN, kMaxN>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

enum class ErrorCode {
  NonLagrangianFrame,
  DegenerateFrame,
  MissingMesh,
  MissingLift,
  EmptyBall,
  UnwrapAmbiguous,
  InconsistentLift,
  NonIntegerWinding,
  InvalidLoop,
  ZeroCurvature,
  CflViolation,
  InitialNotZeroMaslov,
  NotStationary,
  NoSeparation,
  InvalidSpec,
  InvalidVarifold,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonLagrangianFrame: return "NonLagrangianFrame";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::MissingMesh: return "MissingMesh";
    case ErrorCode::MissingLift: return "MissingLift";
    case ErrorCode::EmptyBall: return "EmptyBall";
    case ErrorCode::UnwrapAmbiguous: return "UnwrapAmbiguous";
    case ErrorCode::InconsistentLift: return "InconsistentLift";
    case ErrorCode::NonIntegerWinding: return "NonIntegerWinding";
    case ErrorCode::InvalidLoop: return "InvalidLoop";
    case ErrorCode::ZeroCurvature: return "ZeroCurvature";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::InitialNotZeroMaslov: return "InitialNotZeroMaslov";
    case ErrorCode::NotStationary: return "NotStationary";
    case ErrorCode::NoSeparation: return "NoSeparation";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidVarifold: return "InvalidVarifold";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

/// Shortest signed arc from angle `from` to angle `to` on S^1.
inline double principal_difference(double from, double to) { return wrap_angle(to - from); }

}  // namespace lagflow
