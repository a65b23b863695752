#pragma once

#include <filesystem>
#include <functional>

#include "aalab/config.hpp"
#include "aalab/fields.hpp"
#include "aalab/monitors.hpp"
#include "aalab/stepper.hpp"

namespace aalab::simulation {

/// Builds the t = 0 state described by `bundle.initial` on `bundle.domain`.
/// Throws config::ConfigError when the result is negative somewhere or u
/// vanishes identically.
fields::FieldState initial_state(const config::ConfigBundle& bundle);

struct RunOptions {
  /// Snapshots are written here every run.snapshot_every time units (0 disables).
  std::filesystem::path snapshot_dir;
  /// Called with every diagnostics sample.
  std::function<void(const monitors::DiagnosticSample&)> on_sample;
  /// Called with the state at every diagnostics sample.
  std::function<void(const fields::FieldState&)> on_output;
  /// Called with the initial state and after every accepted step.
  std::function<void(const fields::FieldState&)> on_step;
  /// Step with run.dt_max throughout instead of the CFL estimate.
  bool fixed_dt = false;
};

struct RunResult {
  stepper::StepStatus status = stepper::StepStatus::Advanced;
  fields::FieldState final_state;
  monitors::DiagnosticSeries series;
  long steps = 0;
  int rejected_steps = 0;
  long linear_iterations = 0;
  /// Smallest value of u, v, w over all accepted states.
  double min_value = 0.0;
  monitors::Classification classification = monitors::Classification::Bounded;
};

/// Integrates from the initial data to run.t_end, sampling diagnostics at
/// multiples of run.output_every and at t_end. Stops early on blow-up or
/// step-size underflow.
RunResult run(const config::ConfigBundle& bundle, const RunOptions& options = {});

/// Same, starting from a given state.
RunResult run_from(const config::ConfigBundle& bundle, fields::FieldState state, const RunOptions& options = {});

}  // namespace aalab::simulation
