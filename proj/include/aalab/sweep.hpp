#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "aalab/config.hpp"
#include "aalab/fields.hpp"

namespace aalab::sweep {

/// Model parameters that may be swept.
const std::vector<std::string>& sweepable_parameters();

/// Sets a named model parameter; throws std::invalid_argument for other names.
void set_parameter(config::ModelParams& p, const std::string& name, double value);
double get_parameter(const config::ModelParams& p, const std::string& name);

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

/// Parses "name=v1,v2,...".
SweepAxis parse_axis(const std::string& text);

struct SweepSpec {
  config::ConfigBundle base;
  std::vector<SweepAxis> axes;
  /// Replicate seeds for the initial data; empty means {base.run.seed}.
  std::vector<std::uint64_t> seeds;
  std::size_t cap = 10'000;

  std::size_t point_count() const;
  std::size_t replicate_count() const { return seeds.empty() ? 1 : seeds.size(); }
};

/// Throws std::invalid_argument on more than 3 axes, unknown or repeated
/// names, empty value lists, or more than `cap` runs.
void check_spec(const SweepSpec& spec);

/// Parameter values of point `id`, first axis varying slowest.
std::vector<double> point_values(const SweepSpec& spec, std::size_t id);

struct SweepRow {
  std::size_t point_id = 0;
  std::size_t replicate = 0;
  std::vector<double> values;
  double mu_star = 0.0;
  double margin = 0.0;
  /// Bounded, GrowthSuspected, BlowUp, or Failed.
  std::string classification;
  double final_linf_u = 0.0;
  double final_linf_v = 0.0;
  double final_l1_sum = 0.0;
  long steps = 0;
  double wall_seconds = 0.0;
  /// Non-empty only for Failed rows; written to the sidecar errors file.
  std::string error;
};

struct SweepResult {
  std::vector<std::string> axis_names;
  /// Sorted by (point_id, replicate).
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  unsigned threads = 1;
  /// Completed rows are appended here as they finish (empty disables).
  std::filesystem::path partial_file;
  /// One completed point_id per line (empty disables).
  std::filesystem::path marker_file;
  /// Skip points listed in marker_file, taking their rows from partial_file.
  bool resume = false;
};

/// Runs every (point, replicate) on a worker pool. Per-run failures become
/// rows classified Failed. Results do not depend on the thread count.
SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

/// Evaluates one row without touching any file.
SweepRow run_point(const SweepSpec& spec, std::size_t point_id, std::size_t replicate);

void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::vector<std::string>& comments = {});
SweepResult read_sweep_csv(std::istream& in);
void write_sweep_errors(std::ostream& out, const SweepResult& result);

struct MarginPartition {
  /// "positive", "zero", "negative", or "undefined" (no threshold for dim_n < 3).
  std::string sign;
  std::size_t total = 0;
  std::map<std::string, std::size_t> counts;
};

/// Rows grouped by the sign of min{mu1, mu2} - mu*. A positive margin is a
/// sufficient condition for boundedness only; negative-margin rows carry no
/// expectation of blow-up.
std::vector<MarginPartition> threshold_margin_table(const SweepResult& result);

struct EpsilonStudySpec {
  config::ConfigBundle base;
  /// Strictly decreasing, at least three rungs.
  std::vector<double> ladder;
  unsigned threads = 1;
};

struct EpsilonRung {
  double eps = 0.0;
  double eps_next = 0.0;
  double d_u = 0.0;
  double d_v = 0.0;
  double d_w = 0.0;
  bool inconclusive = false;
  std::string note;
};

struct EpsilonStudyResult {
  std::vector<EpsilonRung> rungs;
  bool decreasing_u = false;
  bool decreasing_v = false;
  bool decreasing_w = false;
  bool inconclusive = false;
};

/// Trajectory stored at the diagnostics output times.
using Trajectory = std::vector<fields::FieldState>;

struct SpaceTimeDistance {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
};

/// L2(Omega x (0, T)) distance by cell midpoint in space and trapezoid in
/// time. Throws std::invalid_argument unless both trajectories share grid and
/// sample times exactly.
SpaceTimeDistance space_time_l2_distance(const Trajectory& a, const Trajectory& b);

struct EpsilonLadderRuns {
  std::vector<Trajectory> trajectories;
  std::vector<bool> completed;
};

/// Runs every rung with the fixed step run.dt_max so that all rungs share
/// their time grid; `completed[j]` is false after blow-up or underflow.
EpsilonLadderRuns run_epsilon_ladder(const EpsilonStudySpec& spec);

/// Throws std::invalid_argument on a short or non-decreasing ladder or
/// non-quadratic exponents.
EpsilonStudyResult epsilon_study(const EpsilonStudySpec& spec);

void write_epsilon_csv(std::ostream& out, const EpsilonStudyResult& result, const std::vector<std::string>& comments = {});

}  // namespace aalab::sweep
