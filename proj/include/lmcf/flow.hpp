#pragma once

#include <functional>
#include <limits>
#include <string>

#include "lmcf/surface.hpp"

namespace lmcf {

/// Explicit-step policy and stop conditions.
struct StepControl {
  double cfl = 0.2;           // dt = cfl * h^2; must lie in (0, 0.5]
  double max_time = 1.0;
  double checkpoint_dt = 0.02;
  long max_steps = 200000000;
  double blowup_guard = 1e8;  // |x| beyond this aborts
  // pinch detection: stop when the monitored gauge falls below
  // pinch_factor * h^2 (the |zw| neck gauge when a pair is configured)
  double pinch_factor = 10.0;
  // absolute gauge threshold; when NaN the threshold is
  // pinch_factor * h0^2 with h0 the initial resolution
  double pinch_threshold = std::numeric_limits<double>::quiet_NaN();
  bool refine_checkpoints_near_pinch = true;
  int max_remesh_events = 64;
  std::function<double(const Vec4&)> remesh_sizing;  // optional

  void validate() const {
    if (!(cfl > 0.0 && cfl <= 0.5))
      fail(ErrorCode::DomainError, "StepControl: cfl must be in (0, 0.5]");
    if (!(checkpoint_dt > 0.0) || !(max_time > 0.0))
      fail(ErrorCode::DomainError, "StepControl: tolerances must be positive");
  }
};

struct FlowEvent {
  double t = 0.0;
  std::string kind;    // "remesh" | "pinch-detected" | "stopped" | "error"
  std::string detail;
};

/// Time-indexed checkpoints plus aligned diagnostic channels.
struct FlowTrace {
  std::vector<double> times;
  std::vector<SurfaceState> states;
  std::vector<FlowEvent> events;
  double T_hat = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::string> channel_names;
  std::vector<double> channel_times;
  std::vector<std::vector<double>> channel_rows;  // row per channel_time
  double h0 = 0.0;  // resolution of the initial state (pinch thresholds)

  void validate() const;
  /// Channel series by name (time, value) pairs.
  std::vector<std::pair<double, double>> channel(const std::string& name) const;
  /// Linear interpolation between topology-compatible checkpoints;
  /// falls back to the nearest checkpoint otherwise.
  SurfaceState state_at(double t) const;
};

/// One explicit step of the potential flow df/dt = atan(l1) + atan(l2) of
/// the finite-difference Hessian (RK2). Boundary nodes follow `boundary`
/// (nullptr: held at their current values).
/// Errors: CFLViolation (dt > h^2/2), NonFinite.
using BoundaryFn = std::function<double(Vec2, double)>;
PotentialGraph step_potential(const PotentialGraph& g, double dt, double t,
                              const BoundaryFn& boundary = nullptr);
PotentialGraph step_potential_serial(const PotentialGraph& g, double dt,
                                     double t,
                                     const BoundaryFn& boundary = nullptr);

/// One explicit step of mesh mean curvature flow (vertices move by H dt,
/// boundary fixed). Errors: CFLViolation, DegenerateTriangle, NonFinite.
Mesh4D step_mesh(const Mesh4D& m, double dt);
Mesh4D step_mesh_serial(const Mesh4D& m, double dt);

/// One explicit RK2 step of curve shortening on both polyline factors.
/// Errors: CFLViolation, PolylineCollapse, NonFinite.
CurveProduct step_curves(const CurveProduct& c, double dt);

/// Per-engine stable step size for the current state.
double natural_dt(const SurfaceState& s, double cfl);

/// Optional per-run monitor: channels sampled at checkpoint cadence, and a
/// pinch gauge (e.g. min |zw|) compared against pinch_factor * h^2.
struct RunMonitor {
  std::vector<std::string> channel_names;
  std::function<std::vector<double>(double, const SurfaceState&)> channels;
  std::function<double(const SurfaceState&)> pinch_gauge;
  BoundaryFn potential_boundary;
};

/// Integrates until a stop condition; on step errors the last good
/// checkpoint is preserved and an event is recorded. Near a detected
/// pinch the checkpoint cadence refines geometrically toward T_hat.
FlowTrace run(const SurfaceState& initial, const StepControl& ctl,
              const RunMonitor& monitor = {});

/// Continues from the last checkpoint of `prefix`. With the same control
/// and monitor, the amended trace reproduces a straight-through run
/// bit-identically (all bookkeeping is a function of checkpoint data).
FlowTrace run_resume(const FlowTrace& prefix, const StepControl& ctl,
                     const RunMonitor& monitor = {});

/// Parabolic rescaling D_lambda about a spacetime center applied to a
/// state: x -> lambda (x - x0). Graph-type states require x0 = 0.
SurfaceState rescale_state(const SurfaceState& s, const Vec4& x0,
                           double lambda);

/// The rescaled-flow view M_tau = e^{tau/2} (M(t0 - e^{-tau}) - x0).
/// Errors: OutOfRange when t0 - e^{-tau} is outside the trace.
SurfaceState rescale_view(const FlowTrace& trace, const Vec4& x0, double t0,
                          double tau);

}  // namespace lmcf
