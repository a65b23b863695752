#include "aalab/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aalab/analytics.hpp"

namespace aalab::monitors {

using fields::Field;
using fields::Grid;

namespace {

using Member = double DiagnosticSample::*;

struct ColumnDef {
  const char* name;
  Member member;
};

constexpr ColumnDef kColumns[] = {
    {"t", &DiagnosticSample::t},
    {"l1_u", &DiagnosticSample::l1_u},
    {"l2_u", &DiagnosticSample::l2_u},
    {"linf_u", &DiagnosticSample::linf_u},
    {"l1_v", &DiagnosticSample::l1_v},
    {"l2_v", &DiagnosticSample::l2_v},
    {"linf_v", &DiagnosticSample::linf_v},
    {"l1_w", &DiagnosticSample::l1_w},
    {"l2_w", &DiagnosticSample::l2_w},
    {"linf_w", &DiagnosticSample::linf_w},
    {"grad_w_sq", &DiagnosticSample::grad_w_sq},
    {"lap_w_sq", &DiagnosticSample::lap_w_sq},
    {"entropy_u", &DiagnosticSample::entropy_u},
    {"entropy_v", &DiagnosticSample::entropy_v},
    {"fisher_u", &DiagnosticSample::fisher_u},
    {"fisher_v", &DiagnosticSample::fisher_v},
    {"energy_y", &DiagnosticSample::energy_y},
    {"dt", &DiagnosticSample::dt},
    {"rejected_steps", &DiagnosticSample::rejected_steps},
};

Member find_member(const std::string& name) {
  for (const auto& c : kColumns) {
    if (name == c.name) return c.member;
  }
  throw std::invalid_argument("unknown diagnostic column '" + name + "'");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

const std::vector<std::string>& DiagnosticSample::column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : kColumns) n.emplace_back(c.name);
    return n;
  }();
  return names;
}

std::vector<double> DiagnosticSample::values() const {
  std::vector<double> v;
  v.reserve(std::size(kColumns));
  for (const auto& c : kColumns) v.push_back(this->*c.member);
  return v;
}

double DiagnosticSample::column(const std::string& name) const { return this->*find_member(name); }

void DiagnosticSample::set_column(const std::string& name, double value) { this->*find_member(name) = value; }

void DiagnosticSeries::add(const DiagnosticSample& s) {
  if (!samples_.empty() && !(s.t > samples_.back().t)) {
    throw std::invalid_argument("DiagnosticSeries: sample times must be strictly increasing (got " + fmt(s.t) +
                                " after " + fmt(samples_.back().t) + ")");
  }
  samples_.push_back(s);
}

double energy_y_from_masses(double mass_u, double mass_v, double mass_w, const ModelParams& p) {
  const double L = analytics::young_constant_L(p.mu2, p.r2, p.r);
  return 2.0 * L / p.mu1 * mass_u + mass_v + (4.0 * L + 2.0 * p.mu1) / p.mu1 * mass_w;
}

double energy_y(const FieldState& s, const ModelParams& p) {
  return energy_y_from_masses(fields::integral(s.u), fields::integral(s.v), fields::integral(s.w), p);
}

DiagnosticSample sample_diagnostics(const FieldState& s, const ModelParams& p, double dt, int rejected_steps) {
  DiagnosticSample d;
  d.t = s.t;
  d.l1_u = fields::lp_norm(s.u, 1.0);
  d.l2_u = fields::lp_norm(s.u, 2.0);
  d.linf_u = fields::lp_norm(s.u, fields::kInfinity);
  d.l1_v = fields::lp_norm(s.v, 1.0);
  d.l2_v = fields::lp_norm(s.v, 2.0);
  d.linf_v = fields::lp_norm(s.v, fields::kInfinity);
  d.l1_w = fields::lp_norm(s.w, 1.0);
  d.l2_w = fields::lp_norm(s.w, 2.0);
  d.linf_w = fields::lp_norm(s.w, fields::kInfinity);
  d.grad_w_sq = fields::grad_sq_integral(s.w);
  const double lw = fields::lp_norm(fields::laplacian(s.w), 2.0);
  d.lap_w_sq = lw * lw;
  const auto eu = fields::entropy_and_fisher(s.u);
  const auto ev = fields::entropy_and_fisher(s.v);
  d.entropy_u = eu.entropy;
  d.entropy_v = ev.entropy;
  d.fisher_u = eu.fisher;
  d.fisher_v = ev.fisher;
  d.energy_y = energy_y(s, p);
  d.dt = dt;
  d.rejected_steps = rejected_steps;
  return d;
}

void write_series_csv(std::ostream& out, const DiagnosticSeries& series, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  const auto& names = DiagnosticSample::column_names();
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  for (const auto& s : series.samples()) {
    const auto v = s.values();
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << fmt(v[i]);
    out << '\n';
  }
}

DiagnosticSeries read_series_csv(std::istream& in) {
  DiagnosticSeries series;
  std::string line;
  std::vector<std::string> header;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("config_hash");
      if (pos != std::string::npos) {
        std::istringstream ls(line.substr(pos + 11));
        std::string h;
        ls >> h;
        if (!h.empty() && h[0] == ':') h.erase(0, 1);
        if (h.empty()) ls >> h;
        series.metadata().config_hash = h;
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      if (std::find(header.begin(), header.end(), "t") == header.end()) {
        throw std::runtime_error("diagnostics CSV lacks a 't' column");
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw std::runtime_error("diagnostics CSV line " + std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    DiagnosticSample s;
    for (std::size_t i = 0; i < header.size(); ++i) {
      double x;
      try {
        std::size_t used = 0;
        x = std::stod(cells[i], &used);
        if (used != cells[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::runtime_error("diagnostics CSV line " + std::to_string(lineno) + ": bad number '" + cells[i] +
                                 "'");
      }
      try {
        s.set_column(header[i], x);
      } catch (const std::invalid_argument&) {
        // unknown columns are carried by other tools; ignore them here
      }
    }
    series.add(s);
  }
  if (header.empty()) throw std::runtime_error("diagnostics CSV has no header row");
  return series;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "consistent";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

constexpr double kMassRelTol = 1e-6;
constexpr double kMassAbsTol = 1e-12;

}  // namespace

MassInequalityReport check_mass_inequality(std::span<const double> t, std::span<const double> y) {
  MassInequalityReport rep;
  const std::size_t n = std::min(t.size(), y.size());
  if (n < 3) {
    rep.detail = "fewer than 3 samples";
    return rep;
  }
  rep.y0 = y[0];
  rep.sup_y = *std::max_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(y[k])) {
      rep.verdict = Verdict::Violated;
      rep.sup_y = std::numeric_limits<double>::infinity();
      rep.detail = "non-finite y at t=" + fmt(t[k]);
      return rep;
    }
  }

  // Per-interval constant C_k with y_{k+1} = y_k e^{-dt/2} + 2 C_k (1 - e^{-dt/2}).
  const std::size_t pairs = n - 1;
  const std::size_t half = std::max<std::size_t>(1, pairs / 2);
  double c_first = 0.0;
  double c_second = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const double dt = t[k + 1] - t[k];
    const double e = std::exp(-0.5 * dt);
    const double ck = (y[k + 1] - y[k] * e) / (2.0 * (1.0 - e));
    (k < half ? c_first : c_second) = std::max(k < half ? c_first : c_second, ck);
  }
  rep.fitted_c = std::max(c_first, c_second);
  rep.fitted_c_first_half = c_first;
  rep.fitted_c_second_half = c_second;
  rep.absorbing_bound = std::max(y[0], 2.0 * rep.fitted_c);

  const double atol = kMassAbsTol * std::max(1.0, rep.sup_y);
  // A series settling onto its limit from above approaches C = y/2 from below,
  // so the first-half scale also admits half the first-half supremum.
  const double y_first = *std::max_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(half + 1));
  const double reference = std::max(c_first, 0.5 * y_first);
  if (c_second > kConstantStabilityRatio * reference + atol) {
    rep.verdict = Verdict::Violated;
    rep.detail = "fitted constant grows from " + fmt(reference) + " (first half scale) to " + fmt(c_second) +
                 " (second half)";
    return rep;
  }
  const double bound = rep.absorbing_bound * (1.0 + kMassRelTol) + atol;
  for (std::size_t k = 0; k < n; ++k) {
    if (y[k] > bound) {
      rep.verdict = Verdict::Violated;
      rep.detail = "y(" + fmt(t[k]) + ") = " + fmt(y[k]) + " exceeds absorbing bound " + fmt(rep.absorbing_bound);
      return rep;
    }
  }
  const double threshold = 2.0 * rep.fitted_c * (1.0 + kMassRelTol) + atol;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (y[k] > threshold && y[k + 1] > y[k] * (1.0 + kMassRelTol) + atol) {
      rep.eventually_nonincreasing = false;
      rep.verdict = Verdict::Violated;
      rep.detail = "y increases above 2C at t=" + fmt(t[k]);
      return rep;
    }
  }
  rep.verdict = Verdict::Consistent;
  rep.detail = "sup y = " + fmt(rep.sup_y) + " <= max{y(0), 2C} = " + fmt(rep.absorbing_bound);
  return rep;
}

MassInequalityReport check_mass_inequality(const DiagnosticSeries& series, const ModelParams&) {
  std::vector<double> t;
  std::vector<double> y;
  for (const auto& s : series.samples()) {
    t.push_back(s.t);
    y.push_back(s.energy_y);
  }
  return check_mass_inequality(t, y);
}

std::string to_string(OdeComparisonVerdict v) {
  switch (v) {
    case OdeComparisonVerdict::HypothesisFails: return "hypothesis fails";
    case OdeComparisonVerdict::ConclusionHolds: return "conclusion holds";
    case OdeComparisonVerdict::ConclusionViolated: return "conclusion violated";
    case OdeComparisonVerdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// Integral over [a, b] of the piecewise-linear interpolant through (t, h).
double pl_integral(std::span<const double> t, std::span<const double> h, double a, double b) {
  const std::size_t n = t.size();
  auto value_at = [&](double x) {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    if (it == t.begin()) return h[0];
    if (it == t.end()) return h[n - 1];
    const std::size_t k = static_cast<std::size_t>(it - t.begin());
    const double w = (x - t[k - 1]) / (t[k] - t[k - 1]);
    return h[k - 1] + w * (h[k] - h[k - 1]);
  };
  double s = 0.0;
  double x0 = a;
  double h0 = value_at(a);
  for (std::size_t k = 0; k < n; ++k) {
    if (t[k] <= a) continue;
    if (t[k] >= b) break;
    s += 0.5 * (t[k] - x0) * (h0 + h[k]);
    x0 = t[k];
    h0 = h[k];
  }
  s += 0.5 * (b - x0) * (h0 + value_at(b));
  return s;
}

}  // namespace

OdeComparisonReport check_ode_comparison(std::span<const double> t, std::span<const double> z, double a_coef,
                                         double alpha, double tau, std::span<const double> h,
                                         OdeComparisonTolerance tol) {
  OdeComparisonReport rep;
  const std::size_t n = t.size();
  if (n < 2 || z.size() != n || h.size() != n) {
    rep.detail = "need at least 2 samples with matching z and h";
    return rep;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!(t[k + 1] > t[k])) {
      rep.detail = "sample times must be strictly increasing";
      return rep;
    }
  }
  rep.realized_max = *std::max_element(z.begin(), z.end());

  rep.hypothesis_holds = true;
  for (std::size_t k = 0; k < n && rep.hypothesis_holds; ++k) {
    if (z[k] < -tol.absolute) {
      rep.hypothesis_holds = false;
      rep.detail = "z negative at t=" + fmt(t[k]);
    }
  }
  for (std::size_t k = 0; k + 1 < n && rep.hypothesis_holds; ++k) {
    const double dt = t[k + 1] - t[k];
    const double dz = (z[k + 1] - z[k]) / dt;
    const double za = 0.5 * (std::pow(std::max(z[k], 0.0), alpha) + std::pow(std::max(z[k + 1], 0.0), alpha));
    const double hm = 0.5 * (h[k] + h[k + 1]);
    const double lhs = dz + a_coef * za;
    const double scale = std::abs(dz) + std::abs(a_coef * za) + std::abs(hm);
    if (lhs > hm + tol.relative * scale + tol.absolute) {
      rep.hypothesis_holds = false;
      rep.detail = "z' + A z^alpha exceeds h on [" + fmt(t[k]) + ", " + fmt(t[k + 1]) + "]";
    }
  }
  if (!rep.hypothesis_holds) {
    rep.verdict = OdeComparisonVerdict::HypothesisFails;
    return rep;
  }

  if (!(tau > 0.0) || t[0] + tau > t[n - 1]) {
    rep.verdict = OdeComparisonVerdict::Inconclusive;
    rep.detail = "window tau does not fit inside the sampled interval";
    return rep;
  }
  double b = 0.0;
  for (std::size_t k = 0; k < n && t[k] + tau <= t[n - 1]; ++k) b = std::max(b, pl_integral(t, h, t[k], t[k] + tau));
  rep.window_bound = b;
  rep.bound_c = analytics::ode_comparison_bound({z[0], a_coef, alpha, b, tau});
  if (rep.realized_max <= rep.bound_c * (1.0 + 1e-9) + tol.absolute) {
    rep.verdict = OdeComparisonVerdict::ConclusionHolds;
    rep.detail = "max z = " + fmt(rep.realized_max) + " <= C = " + fmt(rep.bound_c);
  } else {
    rep.verdict = OdeComparisonVerdict::ConclusionViolated;
    rep.detail = "max z = " + fmt(rep.realized_max) + " > C = " + fmt(rep.bound_c);
  }
  return rep;
}

double WeakTestFunction::temporal(double t) const {
  const double s = 1.0 - t / horizon;
  return s * s;
}

double WeakTestFunction::temporal_derivative(double t) const { return -2.0 * (1.0 - t / horizon) / horizon; }

Field WeakTestFunction::spatial(const Grid& g) const {
  Field f(g);
  const int dims = g.dims();
  g.for_each_cell([&](int i, int j, int k, std::size_t o) {
    const int c[3] = {i, j, k};
    double v = 1.0;
    for (int d = 0; d < dims; ++d) v *= std::cos(modes[d] * std::numbers::pi * g.center(d, c[d]) / g.length(d));
    f[o] = v;
  });
  f.fill_ghosts();
  return f;
}

WeakResidualAccumulator::WeakResidualAccumulator(const ModelParams& p, const WeakTestFunction& phi)
    : params_(p), phi_(phi) {
  if (p.r1 != 2.0 || p.r2 != 2.0) {
    throw std::invalid_argument("weak residuals are defined for r1 = r2 = 2 only");
  }
  if (!(phi.horizon > 0.0)) throw std::invalid_argument("weak test function horizon must be > 0");
}

// For each identity, the time integrand of the LHS - RHS after moving every
// term to one side:  -theta' ∫u c + theta (G_u - chi X_u - ∫S_u c)  etc.
std::array<double, 3> WeakResidualAccumulator::integrand(const FieldState& s) const {
  const Grid& g = s.grid();
  const double vol = g.cell_volume();
  const int dims = g.dims();
  const Field& c = spatial_;
  const ModelParams& p = params_;

  double iu = 0.0, iv = 0.0, iw = 0.0;
  double su = 0.0, sv = 0.0, sw = 0.0;
  g.for_each_cell([&](int, int, int, std::size_t o) {
    const double u = s.u[o], v = s.v[o], w = s.w[o];
    iu += u * c[o];
    iv += v * c[o];
    iw += w * c[o];
    su += (w - p.mu1 * u * u) * c[o];
    sv += (w + p.r * u * v - p.mu2 * v * v) * c[o];
    sw += (u + v - w) * c[o];
  });

  double gu = 0.0, gv = 0.0, gw = 0.0, xu = 0.0, xv = 0.0;
  g.for_each_cell([&](int i, int j, int k, std::size_t a) {
    const int cc[3] = {i, j, k};
    for (int d = 0; d < dims; ++d) {
      if (cc[d] + 1 >= g.cells(d)) continue;
      const std::size_t b = a + g.stride(d);
      const double h2 = g.spacing(d) * g.spacing(d);
      const double dc = c[b] - c[a];
      const double dw = s.w[b] - s.w[a];
      gu += (s.u[b] - s.u[a]) * dc / h2;
      gv += (s.v[b] - s.v[a]) * dc / h2;
      gw += dw * dc / h2;
      const double ru = 0.5 * (s.u[a] + s.u[b]);
      const double rv = 0.5 * (s.v[a] + s.v[b]);
      xu += ru * fields::f_eps(ru, p.epsilon, p.dim_n) * dw * dc / h2;
      xv += rv * fields::f_eps(rv, p.epsilon, p.dim_n) * dw * dc / h2;
    }
  });

  const double th = phi_.temporal(s.t);
  const double dth = phi_.temporal_derivative(s.t);
  return {vol * (-dth * iu + th * (gu - p.chi1 * xu - su)),
          vol * (-dth * iv + th * (gv - p.chi2 * xv - sv)),
          vol * (-dth * iw + th * (gw - sw))};
}

void WeakResidualAccumulator::add(const FieldState& s) {
  if (!have_grid_) {
    if (std::abs(s.t) > 1e-12) throw std::invalid_argument("weak residual trajectory must start at t = 0");
    spatial_ = phi_.spatial(s.grid());
    have_grid_ = true;
    const double vol = s.grid().cell_volume();
    const double th0 = phi_.temporal(0.0);
    double iu = 0.0, iv = 0.0, iw = 0.0;
    s.grid().for_each_cell([&](int, int, int, std::size_t o) {
      iu += s.u[o] * spatial_[o];
      iv += s.v[o] * spatial_[o];
      iw += s.w[o] * spatial_[o];
    });
    initial_term_ = {-th0 * iu * vol, -th0 * iv * vol, -th0 * iw * vol};
  } else {
    if (!(s.grid() == spatial_.grid())) throw std::invalid_argument("weak residual trajectory changes grid");
    if (!(s.t > last_t_)) throw std::invalid_argument("weak residual trajectory times must increase");
  }
  const auto f = integrand(s);
  if (count_ > 0) {
    const double dt = s.t - last_t_;
    for (int e = 0; e < 3; ++e) time_integral_[e] += 0.5 * dt * (last_f_[e] + f[e]);
  }
  last_f_ = f;
  last_t_ = s.t;
  ++count_;
}

WeakResiduals WeakResidualAccumulator::residuals() const {
  if (count_ < 2) throw std::logic_error("weak residuals need at least two samples");
  if (std::abs(last_t_ - phi_.horizon) > 1e-9 * std::max(1.0, phi_.horizon)) {
    throw std::invalid_argument("weak residual trajectory must end at the test-function horizon");
  }
  const double a = phi_.amplitude;
  return {std::abs(a * (time_integral_[0] + initial_term_[0])), std::abs(a * (time_integral_[1] + initial_term_[1])),
          std::abs(a * (time_integral_[2] + initial_term_[2]))};
}

WeakResiduals weak_residuals(std::span<const FieldState> trajectory, const ModelParams& p,
                             const WeakTestFunction& phi) {
  WeakResidualAccumulator acc(p, phi);
  for (const auto& s : trajectory) acc.add(s);
  return acc.residuals();
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Bounded: return "Bounded";
    case Classification::GrowthSuspected: return "GrowthSuspected";
    case Classification::BlowUp: return "BlowUp";
  }
  return "Bounded";
}

Classification classify_run(const DiagnosticSeries& series, stepper::StepStatus outcome, double ratio) {
  if (outcome == stepper::StepStatus::BlowupDetected) return Classification::BlowUp;
  const auto& s = series.samples();
  const std::size_t n = s.size();
  if (n == 0) return Classification::Bounded;
  auto window_max = [&](std::size_t lo, std::size_t hi) {
    double m = 0.0;
    for (std::size_t k = lo; k < hi; ++k) m = std::max(m, s[k].linf_u + s[k].linf_v);
    return m;
  };
  double second, last;
  if (n < 4) {
    second = last = window_max(0, n);
  } else {
    const std::size_t q1 = n / 4;
    const std::size_t q2 = std::max(n / 2, q1 + 1);
    second = window_max(q1, q2);
    last = window_max(3 * n / 4, n);
  }
  if (!std::isfinite(last)) return Classification::GrowthSuspected;
  return last <= ratio * second ? Classification::Bounded : Classification::GrowthSuspected;
}

}  // namespace aalab::monitors
