#pragma once

#include <optional>

#include "lmcf/flow.hpp"
#include "lmcf/neck.hpp"
#include "lmcf/quad.hpp"
#include "lmcf/surface.hpp"

namespace lmcf {

/// The Gaussian-area excess relative to two planes plus the weighted L2
/// deviation of theta from its best constant:
///   A = int e^{-|x|^2/4} - 2 * 4pi + min_th0 int |theta - th0|^2 e^{-|x|^2/4}
struct ExcessReport {
  double gaussian_area = 0.0;
  double plane_pair_reference = 0.0;  // 8 pi
  double theta0_star = 0.0;           // the closed-form minimizer
  double theta_l2_term = 0.0;
  double excess = 0.0;       // A (may be negative)
  double alpha = 0.5;
  double excess_alpha = 0.0;  // |A|^{alpha-1} A, same sign as A
  double tail_bound = 0.0;
  double quad_error = 0.0;
};

ExcessReport excess(const SampleList& samples, double alpha = 0.5,
                    const TailSpec& tail = {}, double h = 0.0);

/// L2 distance to a special pair: I_V^2 = int (|x|^2 d_V^2 +
/// |theta - theta_V|^2) e^{-|x|^2/4}. Errors: NotSpecial.
double dist_IV(const SampleList& samples, const PlanePair& V,
               const TailSpec& tail = {});

/// I_V plus the graphicality gate on B_2 \ B_1: D_V = I_V if the surface
/// is a c1-small C^1 graph there, infinity otherwise.
struct DistanceReport {
  double I_V = 0.0;
  bool graphical = false;
  double sup_u = 0.0, sup_grad_u = 0.0;
  double D_V = 0.0;          // = I_V when graphical
  bool D_V_infinite = true;  // explicit encoding; files write "inf"
  double dv_max = 0.0;       // sup of d_V over samples
  double zw_min = 0.0;       // min |zw| over samples (neck gauge)
};

DistanceReport dist_DV(const SampleList& samples, const PlanePair& V,
                       double c1 = 0.2, const TailSpec& tail = {});

/// Per-sample |zw| with the min/max ratio to |x| d_V and the exact
/// min*max = |zw| identity defect.
struct ZwSummary {
  double min_zw = 0.0, max_zw = 0.0;
  double ratio_lo = 0.0, ratio_hi = 0.0;  // |zw| / (|x| d_V) window
  double identity_defect = 0.0;
};
ZwSummary zw_field(const SampleList& samples, const NeckCoordinates& nc,
                   const PlanePair& V,
                   std::vector<double>* per_sample = nullptr);

/// R_d with d^2 e^{R_d^2 / 4 p0} = 1, i.e. R_d = sqrt(4 p0 ln(1/d^2)).
/// Errors: DomainError unless d in (0, 1] and p0 > 1.
double graphicality_radius(double d, double p0);

/// Liouville primitive beta with d(beta) = lambda|_M integrated over a
/// spanning tree of the mesh edges; loop integrals are the closure defects
/// of the non-tree edges (they span the periods).
struct LiouvilleReport {
  std::vector<double> beta;       // per vertex
  double grad_defect = 0.0;       // max |grad beta - J x^perp| over vertices
  double max_loop_integral = 0.0; // max |period|
  bool exact = false;
  double exact_tol = 1e-8;
  /// with a discreteness constant a: max distance of periods to a*Z
  std::optional<double> rationality_defect;
};
LiouvilleReport liouville_primitive(const Mesh4D& m, double exact_tol = 1e-8,
                                    std::optional<double> rational_a = {});

/// Factor loop integrals of lambda for a curve product (one per closed
/// factor): integral of (x dy - y dx) = 2 * enclosed area.
std::vector<double> liouville_loops(const CurveProduct& c);

/// Derivative-free local minimization of I_V over the 5-parameter special
/// slice through `seed`. `improved` is false when the seed was already
/// optimal (the seed is returned).
struct BestFitResult {
  PlanePair V;
  double I_V = 0.0;
  double seed_I_V = 0.0;
  double dist_to_seed = 0.0;
  bool improved = false;
};
BestFitResult best_fit_pair(const SampleList& samples, const PlanePair& seed,
                            int iterations = 400);

/// Scale scan: lambda-grid (ratio 2^{1/4}) Epsilon-closeness of
/// D_{lambda^{-1}}(M - X) to some pair near V0, per the C^1-graph test on
/// the annulus B_{1/eps} \ B_eps at a sample of block times.
struct ScaleScanOptions {
  double eps_close = 0.25;
  double lambda_lo = 1.0 / 16.0;
  double lambda_hi = 16.0;
  int time_samples = 3;
  double c1 = 0.2;
  bool fit_pairs = true;  // best-fit V_lambda per scale (else use V0)
};
struct ScaleScanResult {
  std::vector<double> lambdas;
  std::vector<char> close;          // per lambda
  std::vector<PlanePair> V_lambda;  // valid where close
  double lambda_min = 0.0, lambda_max = 0.0;  // maximal interval around 1
};
/// Errors: NotCloseAtUnitScale if lambda = 1 fails; OutOfRange for X.
ScaleScanResult scale_scan(const FlowTrace& trace, const Vec4& x0, double t0,
                           const PlanePair& V0, const ScaleScanOptions& opt);

/// Least-squares Lawlor parameter on samples near the neck: eps minimizing
/// sum |z w - eps|^2 (the mean of zw), with sign and relative RMS residual.
/// Errors: IllConditioned when samples span < 3 of 8 angular sectors.
struct LawlorFit {
  cplx eps = 0.0;
  int sign = 0;  // sign of Re(eps) in the pinned gauge
  double residual = 0.0;
};
LawlorFit lawlor_fit(const SampleList& samples, const NeckCoordinates& nc,
                     double fit_radius);

/// Huisken density int rho_{x0,t0} dA at backwards time t0 - t.
double gaussian_density(const SampleList& samples, const Vec4& x0,
                        double t0_minus_t);

}  // namespace lmcf
