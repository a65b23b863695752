#pragma once

#include <array>
#include <string>
#include <vector>

#include "aalab/config.hpp"

namespace aalab::analytics {

struct ThresholdInputs {
  double chi1 = 1.0;
  double chi2 = 1.0;
  double r = 0.0;
  int dim_n = 3;
  double c_sobolev = 1.0;
};

ThresholdInputs threshold_inputs(const config::ModelParams& p);

struct MuStar {
  double value = 0.0;
  /// 2 (N-2)_+ / N * C^{1/(N/2+1)} * max{chi1, chi2}
  double chemotactic_part = 0.0;
  /// (2/N)^{2/(N+2)} N/(N+2) * r
  double proliferation_part = 0.0;
};

/// Damping threshold for the quadratic case r1 = r2 = 2: global boundedness
/// is guaranteed when min{mu1, mu2} exceeds it. Throws std::invalid_argument
/// for dim_n < 3.
MuStar mu_star(const ThresholdInputs& inp);

/// Young's-inequality constant in r u v <= mu2/2 v^r2 + L u^{r2/(r2-1)}:
/// L = (r2-1)/r2 * (mu2 r2 / 2)^{-1/(r2-1)} * r^{r2/(r2-1)}.
/// For r2 == 2 this is returned as r^2 / (2 mu2).
double young_constant_L(double mu2, double r2, double r);

struct HMinQuery {
  double delta = 2.0;
  double chi = 1.0;
  double c_const = 1.0;
};

struct HMinResult {
  double y_min = 0.0;
  double value = 0.0;
  /// True for delta == 1, where A1 = 0 and the infimum 0 is approached as y -> 0+.
  bool infimum_not_attained = false;
};

/// A1 = 1/(delta+1) * ((delta+1)/delta)^{-delta} * ((delta-1)/delta)^{delta+1}
double h_coefficient_a1(double delta);

/// H(y) = y + A1 y^{-delta} (2 chi)^{delta+1} C
double h_function(const HMinQuery& q, double y);
double h_derivative(const HMinQuery& q, double y);

/// Minimiser y = 2 (A1 delta C)^{1/(delta+1)} chi and minimum value
/// 2 (delta-1)/delta * C^{1/(delta+1)} chi.
HMinResult h_min(const HMinQuery& q);

/// The unsimplified minimum 2 (A1 C)^{1/(delta+1)} (delta^{1/(delta+1)} + delta^{-delta/(delta+1)}) chi.
double h_min_unsimplified(const HMinQuery& q);

struct OdeBoundQuery {
  double z0 = 0.0;
  double a_coef = 1.0;
  double alpha = 1.0;
  double b_bound = 0.0;
  double tau = 1.0;
};

/// Bound for z' + A z^alpha <= h with sliding-window integrals of h below B:
/// C = max{z0 + B, tau^{-1/alpha} (B/A)^{1/alpha} + 2B}.
double ode_comparison_bound(const OdeBoundQuery& q);

struct GNQuery {
  double p = 2.0;
  double q = 1.0;
  int dim_n = 3;
};

struct GNResult {
  double alpha = 0.0;
  bool in_unit_interval = false;
  std::string warning;
};

/// alpha = (1/p - 1/q) / (1/2 - 1/N - 1/q). Throws std::invalid_argument when
/// the denominator vanishes (q = 2N/(N-2)) or the query is malformed.
GNResult gn_exponent(const GNQuery& q);

struct Equilibrium {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
};

struct ReactionResiduals {
  double u_eq = 0.0;  // w - mu1 u^r1
  double v_eq = 0.0;  // w + r u v - mu2 v^r2
  double w_eq = 0.0;  // u + v - w
  double max_abs() const;
};

ReactionResiduals reaction_residuals(const config::ModelParams& p, const Equilibrium& e);

/// Nonnegative spatially homogeneous steady states. The origin is always the
/// first entry.
std::vector<Equilibrium> homogeneous_equilibria(const config::ModelParams& p);

struct OdeSample {
  double t = 0.0;
  std::array<double, 3> y{};
};

/// Classical RK4 on the kinetic system (no transport). Throws
/// std::runtime_error when a component drops below -1e-10.
std::vector<OdeSample> homogeneous_ode_trajectory(const config::ModelParams& p, std::array<double, 3> y0,
                                                  double t_end, double dt);

/// Right-hand side of the kinetic system at y.
std::array<double, 3> kinetic_rhs(const config::ModelParams& p, const std::array<double, 3>& y);

}  // namespace aalab::analytics
