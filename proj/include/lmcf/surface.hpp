#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "lmcf/mesh.hpp"
#include "lmcf/neck.hpp"
#include "lmcf/plane.hpp"
#include "lmcf/sample.hpp"

namespace lmcf {

/// Exactly-Lagrangian graph over a plane: the surface {p + J grad f(p)}
/// for a scalar potential f on a Cartesian grid. Nodes (2n+1)^2 cover
/// [-R, R]^2 in the base frame, R = n*h.
struct PotentialGraph {
  LagrangianPlane base;
  int n = 0;
  double h = 0.0;
  std::vector<double> f;  // row-major, (2n+1)^2

  int side() const { return 2 * n + 1; }
  int idx(int i, int j) const { return i * side() + j; }
  bool interior(int i, int j) const {
    return i > 0 && j > 0 && i < side() - 1 && j < side() - 1;
  }
  /// In-plane coordinates of node (i, j).
  Vec2 coords(int i, int j) const {
    return {(i - n) * h, (j - n) * h};
  }
  Vec4 base_point(int i, int j) const {
    return base.frame * coords(i, j);
  }

  static PotentialGraph make(const LagrangianPlane& base, int n, double h,
                             const std::function<double(Vec2)>& f0);
  static PotentialGraph zero(const LagrangianPlane& base, int n, double h);

  /// Gradient and Hessian in the orthonormal base frame (centered
  /// differences inside, one-sided at the boundary).
  Vec2 grad(int i, int j) const;
  Mat2 hessian(int i, int j) const;

  Vec4 position(int i, int j) const;
  void validate() const;  // finite potentials, positive h
};

/// theta at an interior node: theta_base + atan(l1) + atan(l2) of the
/// finite-difference Hessian. Errors: BoundaryNode.
double theta_of_graph(const PotentialGraph& g, int i, int j);

/// Exactly-Lagrangian graph over a plane on an annulus [r_in, r_out],
/// log-uniform radial nodes, periodic angular nodes.
struct PolarGraph {
  LagrangianPlane base;
  double r_in = 0.0, r_out = 0.0;
  int nr = 0, nphi = 0;        // (nr+1) radial nodes, nphi angles
  std::vector<double> f;       // (nr+1) * nphi, radial-major

  double dlr() const { return std::log(r_out / r_in) / nr; }
  double dphi() const { return 2.0 * kPi / nphi; }
  double radius(int k) const { return r_in * std::exp(k * dlr()); }
  int idx(int k, int j) const { return k * nphi + ((j % nphi) + nphi) % nphi; }

  static PolarGraph make(const LagrangianPlane& base, double r_in,
                         double r_out, int nr, int nphi,
                         const std::function<double(double, double)>& f0);

  /// Gradient (orthonormal polar frame) and Hessian at node (k, j).
  Vec2 grad(int k, int j) const;
  Mat2 hessian(int k, int j) const;
  Vec4 base_point(int k, int j) const;
  Vec4 position(int k, int j) const;
};

/// Product of two polylines in C x C; Lagrangian automatically.
struct Polyline {
  std::vector<Vec2> pts;
  bool closed = true;

  static Polyline circle(double radius, int n, Vec2 center = Vec2::Zero());
  static Polyline segment(Vec2 a, Vec2 b, int n);
  static Polyline ellipse(double a, double b, int n);
  double length() const;
  double min_segment() const;
  /// Discrete curvature vector at vertex i (zero at open endpoints).
  Vec2 curvature(int i) const;
  Vec2 tangent(int i) const;
  bool simple() const;  // no self-intersections (segment test)
};

struct CurveProduct {
  Polyline g1, g2;
};

/// Two annular graph charts over a special pair plus an optional Lawlor
/// neck chart {zw = eps} carrying a perturbation potential. Charts are
/// each exactly Lagrangian; the neck takes over inside r_neck_out and the
/// plane charts outside r_plane_in, with a smooth quadrature partition on
/// the overlap.
struct TwoChartGraph {
  PlanePair V;
  NeckCoordinates nc;
  PolarGraph chart1, chart2;
  bool has_neck = false;
  cplx eps = 0.0;
  double r_neck_out = 0.0;   // neck chart authoritative below this |x|-scale
  double r_plane_in = 0.0;   // plane charts authoritative above
  int neck_nr = 0, neck_nphi = 0;
  std::vector<double> psi;   // perturbation on the neck chart (may be empty)

  static TwoChartGraph planes_only(const PlanePair& V, double r_in,
                                   double r_out, int nr, int nphi);
  /// Exact Lawlor neck of parameter eps (real, in the pinned gauge) glued
  /// to exact planes through a C^2 radial taper on [r1, r2]; optional
  /// angular potential bump added on the plane charts.
  static TwoChartGraph lawlor_glued(
      const PlanePair& V, double eps, double r_out, int nr, int nphi,
      double r1, double r2,
      const std::function<double(double, double)>& bump = nullptr);

  /// Max position disagreement between the neck chart and the plane charts
  /// on the overlap annulus, relative to the local scale.
  double stitching_defect() const;

  Mesh4D to_mesh() const;
};

using SurfaceState =
    std::variant<PotentialGraph, TwoChartGraph, Mesh4D, CurveProduct>;

/// Quadrature+diagnostic samples of a state. theta, H and dA are exact for
/// analytic pieces and second-order otherwise. Errors: DegenerateGrid.
SampleList embed(const PotentialGraph& g);
SampleList embed(const PolarGraph& g);
SampleList embed(const CurveProduct& c);
SampleList embed(const TwoChartGraph& t);
SampleList embed(const Mesh4D& m);
SampleList embed(const SurfaceState& s);

/// Representative discretization length of a state (for error estimates).
double state_resolution(const SurfaceState& s);

/// Result of graphicality extraction over a pair on an annulus.
struct Graphicality {
  // per plane: cell-averaged normal displacement field on an (nr x nphi)
  // annular grid, in the normal basis (J e1, J e2) of each plane
  int nr = 0, nphi = 0;
  double r_in = 0.0, r_out = 0.0;
  std::array<std::vector<Vec2>, 2> u;
  double sup_u = 0.0;
  double sup_grad_u = 0.0;
};

/// Single-sheeted C^1-small graph detection over V on the annulus.
/// Returns nullopt when some cell is uncovered, double-sheeted, or the
/// C^0/C^1 norms exceed c1. Absence of graphicality is a result, not an
/// error.
std::optional<Graphicality> graphicality_detect(const SampleList& samples,
                                                const PlanePair& V,
                                                double r_in, double r_out,
                                                double c1, int nr = 12,
                                                int nphi = 48);

/// Refinement / coarsening (node-set compatible: coarsen(refine(s)) is the
/// identity on the shared nodes).
PotentialGraph refine(const PotentialGraph& g);
PotentialGraph coarsen(const PotentialGraph& g);
CurveProduct refine(const CurveProduct& c);
Mesh4D refine(const Mesh4D& m);
SurfaceState refine(const SurfaceState& s);

}  // namespace lmcf
