#pragma once

#include <vector>

#include "lmcf/core.hpp"

namespace lmcf {

/// One quadrature sample of a discrete surface: position, oriented
/// orthonormal tangent frame, Lagrangian angle, mean curvature vector and
/// area weight.
struct SurfaceSample {
  Vec4 x;
  Frame42 frame;
  double theta = 0.0;
  Vec4 H = Vec4::Zero();
  double dA = 0.0;

  Vec4 tangential(const Vec4& v) const {
    return frame * (frame.transpose() * v);
  }
  Vec4 normal(const Vec4& v) const { return v - tangential(v); }
  /// x^perp, the normal projection of the position vector.
  Vec4 x_perp() const { return normal(x); }
};

using SampleList = std::vector<SurfaceSample>;

}  // namespace lmcf
