#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace lmcf {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Frame42 = Eigen::Matrix<double, 4, 2>;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorCode {
  NotLagrangian,
  NotSpecial,
  Degenerate,
  ZeroEps,
  DegenerateGrid,
  BoundaryNode,
  MeshTangled,
  CFLViolation,
  NonFinite,
  DegenerateTriangle,
  PolylineCollapse,
  OutOfRange,
  MissingAreaRatio,
  DomainError,
  DisconnectedRegion,
  NoImprovement,
  NotCloseAtUnitScale,
  IllConditioned,
  InsufficientAngularCoverage,
  BadGapParams,
  ConfigError,
  UnknownSuite,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Signed angular difference a-b wrapped into (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  double normal(double mu = 0.0, double sigma = 1.0) {
    return std::normal_distribution<double>(mu, sigma)(gen);
  }
  Vec4 gaussian4() {
    Vec4 v;
    for (int i = 0; i < 4; ++i) v[i] = normal();
    return v;
  }
  Vec4 unit4() {
    Vec4 v = gaussian4();
    while (v.norm() < 1e-8) v = gaussian4();
    return v.normalized();
  }
};

}  // namespace lmcf
