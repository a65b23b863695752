#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aalab/config.hpp"
#include "aalab/fields.hpp"
#include "aalab/stepper.hpp"

namespace aalab::monitors {

using config::ModelParams;
using fields::FieldState;

struct DiagnosticSample {
  double t = 0.0;
  double l1_u = 0.0, l2_u = 0.0, linf_u = 0.0;
  double l1_v = 0.0, l2_v = 0.0, linf_v = 0.0;
  double l1_w = 0.0, l2_w = 0.0, linf_w = 0.0;
  double grad_w_sq = 0.0;
  double lap_w_sq = 0.0;
  double entropy_u = 0.0, entropy_v = 0.0;
  double fisher_u = 0.0, fisher_v = 0.0;
  double energy_y = 0.0;
  double dt = 0.0;
  double rejected_steps = 0.0;

  static const std::vector<std::string>& column_names();
  std::vector<double> values() const;
  /// Throws std::invalid_argument for an unknown column.
  double column(const std::string& name) const;
  void set_column(const std::string& name, double value);
};

struct SeriesMetadata {
  ModelParams params;
  std::string grid;
  std::string config_hash;
};

class DiagnosticSeries {
 public:
  DiagnosticSeries() = default;
  explicit DiagnosticSeries(SeriesMetadata meta) : meta_(std::move(meta)) {}

  /// Throws std::invalid_argument unless t is strictly increasing.
  void add(const DiagnosticSample& s);

  const std::vector<DiagnosticSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const DiagnosticSample& back() const { return samples_.back(); }
  const SeriesMetadata& metadata() const { return meta_; }
  SeriesMetadata& metadata() { return meta_; }

 private:
  SeriesMetadata meta_;
  std::vector<DiagnosticSample> samples_;
};

/// Weighted mass functional 2L/mu1 ∫u + ∫v + (4L + 2mu1)/mu1 ∫w with L from
/// analytics::young_constant_L.
double energy_y(const FieldState& s, const ModelParams& p);
double energy_y_from_masses(double mass_u, double mass_v, double mass_w, const ModelParams& p);

/// Ghosts of `s` must be filled.
DiagnosticSample sample_diagnostics(const FieldState& s, const ModelParams& p, double dt, int rejected_steps);

/// CSV with '#' comment lines first, then a header row and one row per sample.
void write_series_csv(std::ostream& out, const DiagnosticSeries& series, const std::vector<std::string>& comments = {});
DiagnosticSeries read_series_csv(std::istream& in);

enum class Verdict { Consistent, Violated, Inconclusive };
std::string to_string(Verdict v);

/// Ratio by which the fitted absorbing constant may grow from the first to the
/// second half of a series before the run counts as a violation.
inline constexpr double kConstantStabilityRatio = 1.05;

struct MassInequalityReport {
  Verdict verdict = Verdict::Inconclusive;
  double y0 = 0.0;
  double sup_y = 0.0;
  /// Smallest C >= 0 with y_{k+1} <= y_k e^{-dt/2} + 2C(1 - e^{-dt/2}) on
  /// every sampled interval.
  double fitted_c = 0.0;
  double fitted_c_first_half = 0.0;
  double fitted_c_second_half = 0.0;
  /// max{y(0), 2 fitted_c}
  double absorbing_bound = 0.0;
  bool eventually_nonincreasing = true;
  std::string detail;
};

/// Checks y' + y/2 <= C in integrated form. C is fitted from the samples; a
/// genuine constant must not grow along the run, so the verdict is Violated
/// when the second-half fit exceeds kConstantStabilityRatio times the larger
/// of the first-half fit and half the first-half supremum of y, or when y
/// leaves max{y(0), 2C} or rises while above 2C.
MassInequalityReport check_mass_inequality(const DiagnosticSeries& series, const ModelParams& p);

/// Same check on a bare (t, y) series.
MassInequalityReport check_mass_inequality(std::span<const double> t, std::span<const double> y);

enum class OdeComparisonVerdict { HypothesisFails, ConclusionHolds, ConclusionViolated, Inconclusive };
std::string to_string(OdeComparisonVerdict v);

struct OdeComparisonReport {
  OdeComparisonVerdict verdict = OdeComparisonVerdict::Inconclusive;
  bool hypothesis_holds = false;
  /// Largest sliding-window integral of h (piecewise-linear interpolation).
  double window_bound = 0.0;
  double bound_c = 0.0;
  double realized_max = 0.0;
  std::string detail;
};

struct OdeComparisonTolerance {
  double relative = 1e-3;
  double absolute = 1e-12;
};

/// Checks z' + A z^alpha <= h by midpoint differencing, derives the window
/// bound B from h, and only then compares max z against the comparison bound.
OdeComparisonReport check_ode_comparison(std::span<const double> t, std::span<const double> z, double a_coef,
                                         double alpha, double tau, std::span<const double> h,
                                         OdeComparisonTolerance tol = {});

/// phi(x, t) = amplitude * prod_d cos(k_d pi x_d / L_d) * (1 - t/T)^2 on [0, T].
struct WeakTestFunction {
  std::array<int, 3> modes{1, 0, 0};
  double horizon = 1.0;
  double amplitude = 1.0;

  double temporal(double t) const;
  double temporal_derivative(double t) const;
  fields::Field spatial(const fields::Grid& g) const;
};

struct WeakResiduals {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
};

/// Streams a stored trajectory (first sample at t = 0, last at t = T) and
/// evaluates |LHS - RHS| of the three weak identities with trapezoid-in-time
/// and face/cell midpoint quadrature in space. Requires r1 = r2 = 2.
class WeakResidualAccumulator {
 public:
  WeakResidualAccumulator(const ModelParams& p, const WeakTestFunction& phi);

  void add(const FieldState& s);
  WeakResiduals residuals() const;
  std::size_t samples() const { return count_; }

 private:
  std::array<double, 3> integrand(const FieldState& s) const;

  ModelParams params_;
  WeakTestFunction phi_;
  fields::Field spatial_;
  bool have_grid_ = false;
  std::size_t count_ = 0;
  double last_t_ = 0.0;
  std::array<double, 3> last_f_{};
  std::array<double, 3> time_integral_{};
  std::array<double, 3> initial_term_{};
};

WeakResiduals weak_residuals(std::span<const FieldState> trajectory, const ModelParams& p,
                             const WeakTestFunction& phi);

enum class Classification { Bounded, GrowthSuspected, BlowUp };
std::string to_string(Classification c);

/// BlowUp iff the stepper reported it; Bounded iff the max of Linf(u)+Linf(v)
/// over the last quarter of samples is at most `ratio` times the max over the
/// second quarter.
Classification classify_run(const DiagnosticSeries& series, stepper::StepStatus outcome, double ratio = 1.05);

}  // namespace aalab::monitors
