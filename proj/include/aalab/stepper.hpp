#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include "aalab/config.hpp"
#include "aalab/fields.hpp"

namespace aalab::stepper {

using config::FluxScheme;
using config::ModelParams;
using fields::Field;
using fields::FieldState;

struct StepControl {
  double dt_current = 0.0;
  double dt_max = 1e-2;
  double cfl_advection = 0.4;
  double cfl_reaction = 0.4;
  int rejected_steps = 0;
  FluxScheme scheme = FluxScheme::Central;
  double linear_tol = 1e-10;
  double blowup_linf = 1e8;
  /// Use dt_max for every step instead of the CFL estimate (rejections still halve it).
  bool fixed_dt = false;

  static StepControl from(const config::RunSpec& run);
};

enum class StepStatus { Advanced, BlowupDetected, DtUnderflow };

std::string to_string(StepStatus s);

struct StepOutcome {
  StepStatus status = StepStatus::Advanced;
  FieldState state;
  double dt = 0.0;
  int linear_iterations = 0;
};

class LinearSolverError : public std::runtime_error {
 public:
  LinearSolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline constexpr double kNegativityTolerance = 1e-12;
inline constexpr double kDtUnderflow = 1e-13;
inline constexpr double kDtFloor = 1e-14;
inline constexpr int kMaxConsecutiveRejections = 5;

/// min(dt_max, cfl_advection h / V_max, cfl_reaction / R_max), floored at
/// 1e-14; dt_max itself when ctl.fixed_dt is set.
double compute_dt(const FieldState& state, const ModelParams& params, const StepControl& ctl);

struct DiffuseResult {
  Field field;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Backward-Euler Helmholtz solve ((1 + dt decay) I - dt Δ_h) f+ = f by
/// conjugate gradients. Throws LinearSolverError after 10 n^{1/dims}
/// iterations without reaching `tol`.
DiffuseResult implicit_diffuse(const Field& f, double dt, double decay, double tol = 1e-10);

/// Explicit part of the update (chemotaxis and kinetics for u, v; the source
/// u + v for w), before the implicit diffusion stage.
FieldState explicit_stage(const FieldState& s, const ModelParams& p, double dt, FluxScheme scheme);

/// One IMEX Euler step. `t_limit` caps t + dt (used to land on output times).
/// A negative intermediate value rejects the attempt, which is retried with
/// upwind fluxes and half the step; five consecutive rejections yield
/// DtUnderflow. Linear-solver failures propagate as LinearSolverError.
StepOutcome step(const FieldState& state, const ModelParams& params, StepControl& ctl,
                 double t_limit = std::numeric_limits<double>::infinity());

}  // namespace aalab::stepper
