#pragma once

#include <array>
#include <functional>

#include "lmcf/core.hpp"

namespace lmcf {

// The drift heat equation on a plane: du/ds = L u with
// L = Delta + 1/2 - (1/2) x . grad acting componentwise on 1-forms.
// Eigenmodes: weighted-Hermite polynomials (orthonormal for the
// e^{-|x|^2/4} inner product), rate mu = 1/2 - k/2 at degree k; the
// singular mode d ln|x| has rate 1.

/// 1D orthonormal Hermite factors: phi_k(x) = He_k(x/sqrt(2)) / N_k with
/// integral of phi_j phi_k e^{-x^2/4} = delta_jk.
struct Hermite1D {
  static double value(int k, double x);
  static double deriv(int k, double x);
  static double norm_const(int k);  // N_k
};

struct DriftMode {
  int component;  // 0: dx, 1: dy
  int k1, k2;     // Hermite degrees
  double rate;    // 1/2 - (k1+k2)/2
};

/// Componentwise weighted-Hermite 1-form basis up to total degree k_max,
/// with eigen-rates. verify() returns the max finite-difference residual
/// |(L - mu) phi| over probe points (4th-order stencils).
struct HermiteBasis {
  int k_max = 0;
  std::vector<DriftMode> modes;

  static HermiteBasis make(int k_max);
  Vec2 eval(const DriftMode& m, const Vec2& x) const;
  double verify(double h = 0.005, double probe_radius = 3.0) const;
  /// log-mode FD residual |(L - 1) d ln|x|| over an annulus.
  static double verify_log_mode(double h = 0.005, double r_in = 1.0,
                                double r_out = 3.0);
};

/// Coefficients of a 1-form field on one plane or a pair of planes, in the
/// drift eigenbasis, at the field's current time. The log coefficient a0
/// multiplies d ln|x|.
struct SpectralField {
  int k_max = 0;
  int n_planes = 1;
  std::array<double, 2> a0 = {0.0, 0.0};
  std::array<std::vector<double>, 2> coef;  // aligned with basis.modes

  static SpectralField zero(const HermiteBasis& basis, int n_planes = 1);

  /// eq-norm: |a0|^2 + weighted-L2 of the smooth part (coefficients are
  /// orthonormal, so the sum of squares).
  double norm() const;
  /// Norm after evolving by s (closed form, no state change).
  double norm_at(const HermiteBasis& basis, double s) const;
  Vec2 eval_smooth(const HermiteBasis& basis, int plane, const Vec2& x) const;
  Vec2 eval(const HermiteBasis& basis, int plane, const Vec2& x) const;
};

/// Exact semigroup: coefficients scale by e^{mu s}, a0 by e^{s}.
SpectralField evolve(const HermiteBasis& basis, const SpectralField& f,
                     double s);

/// Projection of a smooth 1-form field onto the basis (tensor quadrature
/// on [-R, R]^2).
SpectralField project_to_basis(const HermiteBasis& basis,
                               const std::function<Vec2(Vec2)>& u,
                               double R = 12.0, int n = 480);

// ---------------------------------------------------------------------------
// finite-difference oracle

/// Independent grid solver for the drift heat equation on [-R, R]^2
/// (4th-order space, RK4 time, zero far-field boundary). Returns the
/// evolved field sampled on the same grid.
struct DriftGridField {
  double R = 12.0;
  int n = 240;  // nodes per dimension
  std::vector<Vec2> u;

  double h() const { return 2.0 * R / (n - 1); }
  int idx(int i, int j) const { return i * n + j; }
  Vec2 coords(int i, int j) const {
    return {-R + i * h(), -R + j * h()};
  }
  static DriftGridField sample(const std::function<Vec2(Vec2)>& u0, double R,
                               int n);
  /// Weighted-L2 distance to a reference field.
  double weighted_l2_diff(const std::function<Vec2(Vec2)>& ref) const;
  double weighted_l2_norm() const;
};
/// Errors: CFLViolation if dt exceeds the stable bound.
DriftGridField evolve_fd(const DriftGridField& u0, double s,
                         double cfl = 0.1);

/// Annulus oracle for the singular mode: evolves u on a polar grid for
/// [r_in, r_out] with boundary matched to c e^s d ln|x|; returns the
/// measured growth factor of the radial log coefficient at s.
double log_mode_growth_fd(double s, double r_in = 0.5, double r_out = 8.0,
                          int nr = 160, int nphi = 48);

// ---------------------------------------------------------------------------
// three-annulus arithmetic

struct ThreeAnnulusParams {
  double a = 0.04;
  double lambda1 = 0.039;
  double lambda2 = 0.041;
  bool skip_gap_check = false;  // negative-control override
};

struct ThreeAnnulusVerdict {
  double n0 = 0, n1 = 0, n2 = 0;  // norms at s = 0, 1, 2
  bool part1_triggered = false;   // ||u(1)|| >= e^{l1} ||u(0)||
  bool part1_ok = true;           // then ||u(2)|| >= e^{l2} ||u(1)||
  bool part2_applicable = false;  // no static component
  bool part2_ok = true;           // one of the two alternatives holds
  bool violated() const {
    return (part1_triggered && !part1_ok) || (part2_applicable && !part2_ok);
  }
};

/// Evaluates Lemma-style three-annulus alternatives on the closed-form
/// norms. Errors: BadGapParams when (a, lambda1, lambda2) are inadmissible
/// for the spectrum (unless skip_gap_check).
ThreeAnnulusVerdict three_annulus_check(const HermiteBasis& basis,
                                        const SpectralField& f,
                                        const ThreeAnnulusParams& p = {});

// ---------------------------------------------------------------------------
// static-mode splitting and log-mode extraction

struct StaticSplit {
  SpectralField u00, u01, u_perp;
  std::array<double, 2> div_u00{}, div_u01{};  // constants per plane
};

/// Splits a pair field into u00 (special-direction static part, equal
/// divergence on both planes), u01 (opposite-sign divergence part) and
/// u_perp (everything else, including the log modes).
StaticSplit split_static(const HermiteBasis& basis, const SpectralField& f);

struct LogModeFit {
  double a0 = 0.0;
  /// remainder u - a0 d ln|x| evaluated through the stored input
  std::function<Vec2(Vec2)> remainder;
};

/// a0 = mean over radii of (1/2pi) contour integral of <u, x/|x|^2> ds.
/// Errors: InsufficientAngularCoverage if nphi < 8.
LogModeFit fit_log_mode(const std::function<Vec2(Vec2)>& u, double r_in,
                        double r_out, int nr = 8, int nphi = 64);

}  // namespace lmcf
