#include "aalab/stepper.hpp"

#include <algorithm>
#include <cmath>

namespace aalab::stepper {

using fields::Grid;

StepControl StepControl::from(const config::RunSpec& run) {
  StepControl c;
  c.dt_current = run.dt_max;
  c.dt_max = run.dt_max;
  c.cfl_advection = run.cfl_advection;
  c.cfl_reaction = run.cfl_reaction;
  c.scheme = run.scheme;
  c.linear_tol = run.linear_tol;
  c.blowup_linf = run.blowup_linf;
  return c;
}

std::string to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Advanced: return "advanced";
    case StepStatus::BlowupDetected: return "blowup_detected";
    case StepStatus::DtUnderflow: return "dt_underflow";
  }
  return "advanced";
}

namespace {

double pos_pow(double x, double e) { return std::pow(std::max(x, 0.0), e); }

double max_face_gradient(const Field& w) {
  const Grid& g = w.grid();
  double m = 0.0;
  const int dims = g.dims();
  g.for_each_cell([&](int i, int j, int k, std::size_t o) {
    const int c[3] = {i, j, k};
    for (int d = 0; d < dims; ++d) {
      if (c[d] + 1 < g.cells(d)) m = std::max(m, std::abs(w[o + g.stride(d)] - w[o]) / g.spacing(d));
    }
  });
  return m;
}

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  a.grid().for_each_cell([&](int, int, int, std::size_t o) { s += a[o] * b[o]; });
  return s;
}

// y = ((1 + dt decay) I - dt Δ_h) x ; x must have ghosts filled.
void apply_helmholtz(const Field& x, double dt, double decay, Field& y) {
  const Grid& g = x.grid();
  const int dims = g.dims();
  std::array<double, 3> c{};
  for (int d = 0; d < dims; ++d) c[d] = dt / (g.spacing(d) * g.spacing(d));
  const double diag = 1.0 + dt * decay;
  g.for_each_cell([&](int, int, int, std::size_t o) {
    double s = diag * x[o];
    for (int d = 0; d < dims; ++d) {
      const std::size_t st = g.stride(d);
      s -= c[d] * (x[o + st] - 2.0 * x[o] + x[o - st]);
    }
    y[o] = s;
  });
}

}  // namespace

double compute_dt(const FieldState& s, const ModelParams& p, const StepControl& ctl) {
  if (ctl.fixed_dt) return ctl.dt_max;
  const double grad_max = max_face_gradient(s.w);
  const double rho_min = std::max(0.0, std::min(s.u.min(), s.v.min()));
  const double v_max = std::max(p.chi1, p.chi2) * grad_max * fields::f_eps(rho_min, p.epsilon, p.dim_n);

  double r_max = 0.0;
  s.grid().for_each_cell([&](int, int, int, std::size_t o) {
    const double u = std::max(s.u[o], 0.0);
    const double v = std::max(s.v[o], 0.0);
    const double rate = p.mu1 * p.r1 * pos_pow(u, p.r1 - 1.0) + p.mu2 * p.r2 * pos_pow(v, p.r2 - 1.0) +
                        p.r * (u + v) + 1.0;
    r_max = std::max(r_max, rate);
  });

  double dt = ctl.dt_max;
  if (v_max > 0.0) dt = std::min(dt, ctl.cfl_advection * s.grid().min_spacing() / v_max);
  if (r_max > 0.0) dt = std::min(dt, ctl.cfl_reaction / r_max);
  if (!(dt >= kDtFloor)) dt = kDtFloor;
  return dt;
}

DiffuseResult implicit_diffuse(const Field& f, double dt, double decay, double tol) {
  const Grid& g = f.grid();
  DiffuseResult res{Field(g), 0, 0.0};
  Field& x = res.field;

  const double b_norm = std::sqrt(dot(f, f));
  if (b_norm == 0.0) return res;

  const double diag = 1.0 + dt * decay;
  g.for_each_cell([&](int, int, int, std::size_t o) { x[o] = f[o] / diag; });
  x.fill_ghosts();

  Field r(g);
  Field p(g);
  Field ap(g);
  apply_helmholtz(x, dt, decay, ap);
  g.for_each_cell([&](int, int, int, std::size_t o) { r[o] = f[o] - ap[o]; });
  double rr = dot(r, r);
  const double target = tol * b_norm;

  const int max_iter = static_cast<int>(std::ceil(
      10.0 * std::pow(static_cast<double>(g.interior_count()), 1.0 / static_cast<double>(g.dims()))));

  p = r;
  int it = 0;
  while (std::sqrt(rr) > target) {
    if (it >= max_iter) {
      throw LinearSolverError("implicit_diffuse: CG did not converge in " + std::to_string(max_iter) +
                                  " iterations (relative residual " + std::to_string(std::sqrt(rr) / b_norm) +
                                  ", target " + std::to_string(tol) + ")",
                              std::sqrt(rr) / b_norm);
    }
    ++it;
    p.fill_ghosts();
    apply_helmholtz(p, dt, decay, ap);
    const double alpha = rr / dot(p, ap);
    g.for_each_cell([&](int, int, int, std::size_t o) {
      x[o] += alpha * p[o];
      r[o] -= alpha * ap[o];
    });
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    g.for_each_cell([&](int, int, int, std::size_t o) { p[o] = r[o] + beta * p[o]; });
  }
  x.fill_ghosts();
  res.iterations = it;
  res.relative_residual = std::sqrt(rr) / b_norm;
  return res;
}

FieldState explicit_stage(const FieldState& s, const ModelParams& p, double dt, FluxScheme scheme) {
  const Grid& g = s.grid();
  const Field chem_u = fields::chemotactic_divergence(s.u, s.w, p.chi1, p.epsilon, p.dim_n, scheme);
  const Field chem_v = fields::chemotactic_divergence(s.v, s.w, p.chi2, p.epsilon, p.dim_n, scheme);
  FieldState out{Field(g), Field(g), Field(g), s.t};
  g.for_each_cell([&](int, int, int, std::size_t o) {
    const double u = s.u[o];
    const double v = s.v[o];
    const double w = s.w[o];
    out.u[o] = u + dt * (chem_u[o] + w - p.mu1 * pos_pow(u, p.r1));
    out.v[o] = v + dt * (chem_v[o] + w + p.r * u * v - p.mu2 * pos_pow(v, p.r2));
    out.w[o] = w + dt * (u + v);
  });
  out.fill_ghosts();
  return out;
}

namespace {

bool state_finite(const FieldState& s) { return s.u.all_finite() && s.v.all_finite() && s.w.all_finite(); }

// Solves with `tol`; if the right-hand side is nonnegative but the iterate dips
// below the negativity tolerance, tightens the tolerance before giving up.
DiffuseResult guarded_diffuse(const Field& rhs, double dt, double decay, double tol, int& iterations) {
  DiffuseResult r = implicit_diffuse(rhs, dt, decay, tol);
  iterations += r.iterations;
  if (rhs.min() >= 0.0) {
    for (double t = tol * 1e-3; r.field.min() < -kNegativityTolerance && t >= 1e-16; t *= 1e-3) {
      r = implicit_diffuse(rhs, dt, decay, t);
      iterations += r.iterations;
    }
  }
  return r;
}

}  // namespace

StepOutcome step(const FieldState& state, const ModelParams& params, StepControl& ctl, double t_limit) {
  FieldState s = state;
  s.fill_ghosts();

  StepOutcome out;
  double dt = compute_dt(s, params, ctl);
  bool lands_on_limit = false;
  // Snap onto the limit when only round-off would be left over.
  if (t_limit - s.t <= dt * (1.0 + 1e-9)) {
    dt = t_limit - s.t;
    lands_on_limit = true;
  }
  FluxScheme scheme = ctl.scheme;

  for (int attempt = 0; attempt < kMaxConsecutiveRejections; ++attempt) {
    if (dt < kDtUnderflow) {
      out.status = StepStatus::DtUnderflow;
      out.state = s;
      out.dt = dt;
      return out;
    }
    FieldState e = explicit_stage(s, params, dt, scheme);
    if (!state_finite(e)) {
      out.status = StepStatus::BlowupDetected;
      out.state = std::move(e);
      out.dt = dt;
      return out;
    }
    bool accepted = e.min() >= -kNegativityTolerance;
    if (accepted) {
      int iters = 0;
      FieldState next{guarded_diffuse(e.u, dt, 0.0, ctl.linear_tol, iters).field,
                      guarded_diffuse(e.v, dt, 0.0, ctl.linear_tol, iters).field,
                      guarded_diffuse(e.w, dt, 1.0, ctl.linear_tol, iters).field,
                      lands_on_limit ? t_limit : s.t + dt};
      out.linear_iterations += iters;
      accepted = next.min() >= -kNegativityTolerance;
      if (accepted) {
        ctl.dt_current = dt;
        out.dt = dt;
        const double linf = fields::lp_norm(next.u, fields::kInfinity) + fields::lp_norm(next.v, fields::kInfinity);
        out.status = (linf > ctl.blowup_linf || !std::isfinite(linf)) ? StepStatus::BlowupDetected
                                                                       : StepStatus::Advanced;
        out.state = std::move(next);
        return out;
      }
    }
    ++ctl.rejected_steps;
    scheme = FluxScheme::Upwind;
    dt *= 0.5;
    lands_on_limit = false;
  }
  out.status = StepStatus::DtUnderflow;
  out.state = s;
  out.dt = dt;
  return out;
}

}  // namespace aalab::stepper
