#include "aalab/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <numbers>

namespace aalab::simulation {

using config::ComponentInit;
using config::InitialKind;
using fields::Field;
using fields::FieldState;
using fields::Grid;

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Field component_field(const Grid& g, const config::InitialData& init, const ComponentInit& c,
                      std::mt19937_64& rng) {
  Field f(g, c.base);
  const int dims = g.dims();
  switch (init.kind) {
    case InitialKind::Constant:
    case InitialKind::FromSnapshot:
      break;
    case InitialKind::CosineBump:
      g.for_each_cell([&](int i, int j, int k, std::size_t o) {
        const int idx[3] = {i, j, k};
        double v = 1.0;
        for (int d = 0; d < dims; ++d) v *= std::cos(init.mode * std::numbers::pi * g.center(d, idx[d]) / g.length(d));
        f[o] = c.base + c.amplitude * v;
      });
      break;
    case InitialKind::GaussianBumps: {
      std::vector<std::array<double, 3>> centers;
      centers.push_back({c.center[0] * g.length(0), c.center[1] * g.length(1), c.center[2] * g.length(2)});
      for (int b = 1; b < init.bumps; ++b) {
        std::array<double, 3> x{};
        for (int d = 0; d < 3; ++d) x[d] = unit_uniform(rng) * g.length(d);
        centers.push_back(x);
      }
      const double inv = 1.0 / (2.0 * c.width * c.width);
      g.for_each_cell([&](int i, int j, int k, std::size_t o) {
        const int idx[3] = {i, j, k};
        double s = 0.0;
        for (const auto& x : centers) {
          double r2 = 0.0;
          for (int d = 0; d < dims; ++d) {
            const double dx = g.center(d, idx[d]) - x[d];
            r2 += dx * dx;
          }
          s += std::exp(-r2 * inv);
        }
        f[o] = c.base + c.amplitude * s;
      });
      break;
    }
    case InitialKind::RandomPerturbation:
      g.for_each_cell([&](int, int, int, std::size_t o) {
        f[o] = c.base * (1.0 + c.amplitude * (2.0 * unit_uniform(rng) - 1.0));
      });
      break;
  }
  f.fill_ghosts();
  return f;
}

}  // namespace

FieldState initial_state(const config::ConfigBundle& bundle) {
  const Grid g(bundle.domain);
  const auto& init = bundle.initial;
  FieldState s;
  if (init.kind == InitialKind::FromSnapshot) {
    s = fields::read_snapshot(init.snapshot, g);
    s.t = 0.0;
  } else {
    std::mt19937_64 rng(bundle.run.seed);
    s.u = component_field(g, init, init.u, rng);
    s.v = component_field(g, init, init.v, rng);
    s.w = component_field(g, init, init.w, rng);
    s.t = 0.0;
  }
  std::vector<std::string> problems;
  if (s.u.min() < 0.0) problems.push_back("u0 must be nonnegative");
  if (s.v.min() < 0.0) problems.push_back("v0 must be nonnegative");
  if (s.w.min() < 0.0) problems.push_back("w0 must be nonnegative");
  if (!(s.u.max() > 0.0)) problems.push_back("u0 must not vanish identically");
  if (!s.u.all_finite() || !s.v.all_finite() || !s.w.all_finite()) problems.push_back("initial data must be finite");
  if (!problems.empty()) throw config::ConfigError("invalid initial data", problems);
  return s;
}

RunResult run(const config::ConfigBundle& bundle, const RunOptions& options) {
  return run_from(bundle, initial_state(bundle), options);
}

RunResult run_from(const config::ConfigBundle& bundle, FieldState state, const RunOptions& options) {
  const auto& p = bundle.model;
  const auto& rs = bundle.run;
  state.fill_ghosts();

  RunResult res;
  {
    monitors::SeriesMetadata meta;
    meta.params = p;
    const Grid& g = state.grid();
    std::string desc = "dims=" + std::to_string(g.dims()) + " cells=";
    for (int d = 0; d < g.dims(); ++d) desc += (d ? "x" : "") + std::to_string(g.cells(d));
    char buf[64];
    desc += " lengths=";
    for (int d = 0; d < g.dims(); ++d) {
      std::snprintf(buf, sizeof(buf), "%s%g", d ? "x" : "", g.length(d));
      desc += buf;
    }
    meta.grid = desc;
    meta.config_hash = config::config_hash(bundle);
    res.series = monitors::DiagnosticSeries(std::move(meta));
  }

  stepper::StepControl ctl = stepper::StepControl::from(rs);
  ctl.fixed_dt = options.fixed_dt;
  double last_dt = 0.0;
  auto record = [&](const FieldState& s) {
    const auto d = monitors::sample_diagnostics(s, p, last_dt, ctl.rejected_steps);
    res.series.add(d);
    if (options.on_sample) options.on_sample(d);
    if (options.on_output) options.on_output(s);
  };

  int snap_index = 0;
  double next_snap = 0.0;
  auto maybe_snapshot = [&](const FieldState& s, bool force) {
    if (options.snapshot_dir.empty() || !(rs.snapshot_every > 0.0)) return;
    if (!force && s.t + 1e-12 * std::max(1.0, s.t) < next_snap) return;
    char name[48];
    std::snprintf(name, sizeof(name), "snapshot_%06d.bin", snap_index++);
    fields::write_snapshot(options.snapshot_dir / name, s);
    while (next_snap <= s.t + 1e-12 * std::max(1.0, s.t)) next_snap += rs.snapshot_every;
  };

  res.min_value = state.min();
  if (options.on_step) options.on_step(state);
  record(state);
  maybe_snapshot(state, false);

  const double linf0 = fields::lp_norm(state.u, fields::kInfinity) + fields::lp_norm(state.v, fields::kInfinity);
  if (linf0 > rs.blowup_linf) {
    res.status = stepper::StepStatus::BlowupDetected;
    res.final_state = std::move(state);
    res.classification = monitors::classify_run(res.series, res.status, rs.classify_ratio);
    return res;
  }

  const double eps_t = 1e-12 * std::max(1.0, rs.t_end);
  long out_index = 1;
  auto next_output = [&] {
    const double t = out_index * rs.output_every;
    return t >= rs.t_end - eps_t ? rs.t_end : t;
  };

  double target = next_output();
  while (state.t < rs.t_end - eps_t) {
    auto out = stepper::step(state, p, ctl, target);
    res.linear_iterations += out.linear_iterations;
    if (out.status == stepper::StepStatus::DtUnderflow) {
      res.status = out.status;
      break;
    }
    ++res.steps;
    last_dt = out.dt;
    state = std::move(out.state);
    if (out.status == stepper::StepStatus::BlowupDetected) {
      res.status = out.status;
      if (state.t > res.series.back().t) record(state);
      break;
    }
    res.min_value = std::min(res.min_value, state.min());
    if (options.on_step) options.on_step(state);
    maybe_snapshot(state, false);
    if (state.t >= target - eps_t) {
      state.t = target;
      record(state);
      ++out_index;
      while (next_output() <= state.t + eps_t && state.t < rs.t_end - eps_t) ++out_index;
      target = next_output();
    }
  }
  res.rejected_steps = ctl.rejected_steps;
  res.classification = monitors::classify_run(res.series, res.status, rs.classify_ratio);
  res.final_state = std::move(state);
  return res;
}

}  // namespace aalab::simulation
