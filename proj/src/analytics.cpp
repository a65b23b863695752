#include "aalab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aalab::analytics {

ThresholdInputs threshold_inputs(const config::ModelParams& p) {
  return ThresholdInputs{p.chi1, p.chi2, p.r, p.dim_n, p.c_sobolev};
}

MuStar mu_star(const ThresholdInputs& inp) {
  if (inp.dim_n < 3) {
    throw std::invalid_argument("mu_star requires dim_n >= 3 (got " + std::to_string(inp.dim_n) + ")");
  }
  const double n = inp.dim_n;
  const double gamma = n / 2.0 + 1.0;
  MuStar m;
  m.chemotactic_part = 2.0 * std::max(n - 2.0, 0.0) / n * std::pow(inp.c_sobolev, 1.0 / gamma) *
                       std::max(inp.chi1, inp.chi2);
  m.proliferation_part = std::pow(2.0 / n, 2.0 / (n + 2.0)) * n / (n + 2.0) * inp.r;
  m.value = m.chemotactic_part + m.proliferation_part;
  return m;
}

double young_constant_L(double mu2, double r2, double r) {
  if (r == 0.0) return 0.0;
  if (r2 == 2.0) return r * r / (2.0 * mu2);
  const double conj = r2 / (r2 - 1.0);
  return (r2 - 1.0) / r2 * std::pow(mu2 * r2 / 2.0, -1.0 / (r2 - 1.0)) * std::pow(r, conj);
}

double h_coefficient_a1(double delta) {
  if (delta == 1.0) return 0.0;
  return 1.0 / (delta + 1.0) * std::pow((delta + 1.0) / delta, -delta) *
         std::pow((delta - 1.0) / delta, delta + 1.0);
}

double h_function(const HMinQuery& q, double y) {
  const double a1 = h_coefficient_a1(q.delta);
  return y + a1 * std::pow(y, -q.delta) * std::pow(2.0 * q.chi, q.delta + 1.0) * q.c_const;
}

double h_derivative(const HMinQuery& q, double y) {
  const double a1 = h_coefficient_a1(q.delta);
  return 1.0 - a1 * q.delta * q.c_const * std::pow(2.0 * q.chi / y, q.delta + 1.0);
}

HMinResult h_min(const HMinQuery& q) {
  HMinResult res;
  if (q.delta == 1.0) {
    res.infimum_not_attained = true;
    return res;
  }
  const double a1 = h_coefficient_a1(q.delta);
  const double e = 1.0 / (q.delta + 1.0);
  res.y_min = 2.0 * std::pow(a1 * q.delta * q.c_const, e) * q.chi;
  res.value = 2.0 * (q.delta - 1.0) / q.delta * std::pow(q.c_const, e) * q.chi;
  return res;
}

double h_min_unsimplified(const HMinQuery& q) {
  const double a1 = h_coefficient_a1(q.delta);
  const double e = 1.0 / (q.delta + 1.0);
  return 2.0 * std::pow(a1 * q.c_const, e) *
         (std::pow(q.delta, e) + std::pow(q.delta, -q.delta * e)) * q.chi;
}

double ode_comparison_bound(const OdeBoundQuery& q) {
  const double first = q.z0 + q.b_bound;
  const double second =
      std::pow(q.tau, -1.0 / q.alpha) * std::pow(q.b_bound / q.a_coef, 1.0 / q.alpha) + 2.0 * q.b_bound;
  return std::max(first, second);
}

GNResult gn_exponent(const GNQuery& q) {
  if (!(q.p >= 1.0)) throw std::invalid_argument("gn_exponent: p must be >= 1");
  if (!(q.q > 0.0 && q.q <= q.p)) throw std::invalid_argument("gn_exponent: q must lie in (0, p]");
  if (q.dim_n < 1) throw std::invalid_argument("gn_exponent: dim_n must be >= 1");
  const double num = 1.0 / q.p - 1.0 / q.q;
  const double den = 0.5 - 1.0 / q.dim_n - 1.0 / q.q;
  if (std::abs(den) < 1e-14) {
    throw std::invalid_argument("gn_exponent: denominator 1/2 - 1/N - 1/q vanishes (q = 2N/(N-2) = " +
                                std::to_string(q.q) + ")");
  }
  GNResult r;
  r.alpha = num / den;
  r.in_unit_interval = r.alpha > 0.0 && r.alpha < 1.0;
  if (!r.in_unit_interval) {
    r.warning = "alpha = " + std::to_string(r.alpha) + " lies outside (0, 1)";
  }
  return r;
}

double ReactionResiduals::max_abs() const {
  return std::max({std::abs(u_eq), std::abs(v_eq), std::abs(w_eq)});
}

ReactionResiduals reaction_residuals(const config::ModelParams& p, const Equilibrium& e) {
  ReactionResiduals r;
  r.u_eq = e.w - p.mu1 * std::pow(e.u, p.r1);
  r.v_eq = e.w + p.r * e.u * e.v - p.mu2 * std::pow(e.v, p.r2);
  r.w_eq = e.u + e.v - e.w;
  return r;
}

namespace {

// After eliminating w = mu1 u^r1 and v = w - u, steady states are the roots of
// g(u) = mu2 v^r2 - w - r u v on the branch v >= 0.
struct Reduced {
  const config::ModelParams& p;

  Equilibrium state(double u) const {
    Equilibrium e;
    e.u = u;
    e.w = p.mu1 * std::pow(u, p.r1);
    e.v = std::max(e.w - u, 0.0);
    return e;
  }

  double g(double u) const {
    const Equilibrium e = state(u);
    return p.mu2 * std::pow(e.v, p.r2) - e.w - p.r * e.u * e.v;
  }
};

double bisect(const Reduced& f, double lo, double hi, double g_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = f.g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = gm;
    } else {
      hi = mid;
    }
  }
  return std::abs(f.g(lo)) <= std::abs(f.g(hi)) ? lo : hi;
}

}  // namespace

std::vector<Equilibrium> homogeneous_equilibria(const config::ModelParams& p) {
  std::vector<Equilibrium> out{Equilibrium{}};
  const Reduced f{p};

  // v >= 0 requires mu1 u^{r1-1} >= 1.
  const double u_min = std::pow(1.0 / p.mu1, 1.0 / (p.r1 - 1.0));
  const double coef_sum = p.mu1 + p.mu2 + p.r;
  double u_max = std::max({10.0, std::pow(2.0 * coef_sum, 2.0), 2.0 * u_min});
  // g -> +inf as u -> inf; widen until the bracket closes.
  for (int i = 0; i < 200 && f.g(u_max) <= 0.0; ++i) u_max *= 2.0;

  constexpr int kIntervals = 10000;
  const double step = (u_max - u_min) / kIntervals;
  double a = u_min;
  double ga = f.g(a);
  for (int i = 1; i <= kIntervals; ++i) {
    const double b = (i == kIntervals) ? u_max : u_min + i * step;
    const double gb = f.g(b);
    double root = -1.0;
    if (gb == 0.0) {
      root = b;
    } else if ((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0)) {
      root = bisect(f, a, b, ga);
    }
    if (root > 0.0) {
      const Equilibrium e = f.state(root);
      const bool duplicate = std::any_of(out.begin() + 1, out.end(), [&](const Equilibrium& o) {
        return std::abs(o.u - e.u) <= 1e-9 * std::max(1.0, e.u);
      });
      if (!duplicate) out.push_back(e);
    }
    a = b;
    ga = gb;
  }
  return out;
}

std::array<double, 3> kinetic_rhs(const config::ModelParams& p, const std::array<double, 3>& y) {
  const double u = std::max(y[0], 0.0);
  const double v = std::max(y[1], 0.0);
  const double w = y[2];
  return {w - p.mu1 * std::pow(u, p.r1), w + p.r * u * v - p.mu2 * std::pow(v, p.r2), y[0] + y[1] - w};
}

std::vector<OdeSample> homogeneous_ode_trajectory(const config::ModelParams& p, std::array<double, 3> y0,
                                                  double t_end, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("homogeneous_ode_trajectory: dt must be > 0");
  for (double c : y0) {
    if (c < 0.0) throw std::invalid_argument("homogeneous_ode_trajectory: y0 must be nonnegative");
  }
  std::vector<OdeSample> out;
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  out.reserve(static_cast<std::size_t>(std::max(steps, 0L)) + 1);
  out.push_back({0.0, y0});
  auto y = y0;
  double t = 0.0;
  for (long n = 0; n < steps; ++n) {
    const double h = std::min(dt, t_end - t);
    const auto k1 = kinetic_rhs(p, y);
    std::array<double, 3> tmp;
    for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    const auto k2 = kinetic_rhs(p, tmp);
    for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    const auto k3 = kinetic_rhs(p, tmp);
    for (int i = 0; i < 3; ++i) tmp[i] = y[i] + h * k3[i];
    const auto k4 = kinetic_rhs(p, tmp);
    for (int i = 0; i < 3; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = (n + 1 == steps) ? t_end : t + h;
    for (double c : y) {
      if (c < -1e-10) {
        throw std::runtime_error("homogeneous_ode_trajectory: negative component at t = " + std::to_string(t));
      }
    }
    out.push_back({t, y});
  }
  return out;
}

}  // namespace aalab::analytics
