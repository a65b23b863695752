#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "aalab/analytics.hpp"
#include "aalab/monitors.hpp"
#include "aalab/simulation.hpp"
#include "oracles.hpp"

using namespace aalab::monitors;
using aalab::fields::Field;
using aalab::fields::Grid;
using aalab::stepper::StepStatus;

namespace {

FieldState constant_state(const Grid& g, double u, double v, double w, double t = 0.0) {
  FieldState s{Field(g, u), Field(g, v), Field(g, w), t};
  s.fill_ghosts();
  return s;
}

DiagnosticSeries linf_series(const std::vector<double>& linf) {
  DiagnosticSeries s;
  for (std::size_t k = 0; k < linf.size(); ++k) {
    DiagnosticSample d;
    d.t = static_cast<double>(k);
    d.linf_u = linf[k];
    d.linf_v = 0.5 * linf[k];
    s.add(d);
  }
  return s;
}

std::vector<FieldState> stepped_trajectory(const ModelParams& p, double dt, double horizon) {
  const Grid g(1, {32, 1, 1}, {1.0, 1.0, 1.0});
  FieldState s{Field(g), Field(g), Field(g), 0.0};
  for (int i = 0; i < 32; ++i) {
    const double x = g.center(0, i);
    s.u.at(i) = 1.0 + 0.5 * std::cos(3.14159265358979 * x);
    s.v.at(i) = 1.0 - 0.3 * std::cos(3.14159265358979 * x);
    s.w.at(i) = 1.0 + 0.2 * x * x;
  }
  s.fill_ghosts();
  aalab::stepper::StepControl ctl;
  ctl.dt_max = dt;
  ctl.fixed_dt = true;
  std::vector<FieldState> traj{s};
  while (s.t < horizon) {
    auto out = aalab::stepper::step(s, p, ctl, horizon);
    REQUIRE(out.status == StepStatus::Advanced);
    s = out.state;
    traj.push_back(s);
  }
  return traj;
}

}  // namespace

TEST_CASE("energy_y examples") {
  const Grid g(1, {10, 1, 1}, {1.0, 1.0, 1.0});
  ModelParams p;
  p.r = 2.0;  // L = r^2 / (2 mu2) = 2
  CHECK(energy_y(constant_state(g, 0, 0, 0), p) == 0.0);
  CHECK(energy_y(constant_state(g, 1, 1, 1), p) == doctest::Approx(15.0).epsilon(1e-14));
  ModelParams q;
  q.r = 0.0;
  CHECK(energy_y(constant_state(g, 3, 0.5, 0.25), q) == doctest::Approx(0.5 + 2.0 * 0.25).epsilon(1e-14));
}

TEST_CASE("energy_y is linear in the masses with the stated weights") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  for (int k = 0; k < 50; ++k) {
    ModelParams p;
    p.mu1 = U(rng);
    p.mu2 = U(rng);
    p.r = U(rng);
    const double l = aalab::analytics::young_constant_L(p.mu2, 2.0, p.r);
    const double mu = U(rng), mv = U(rng), mw = U(rng), d = 1e-3;
    const double y0 = energy_y_from_masses(mu, mv, mw, p);
    CHECK((energy_y_from_masses(mu + d, mv, mw, p) - y0) / d == doctest::Approx(2.0 * l / p.mu1).epsilon(1e-8));
    CHECK((energy_y_from_masses(mu, mv + d, mw, p) - y0) / d == doctest::Approx(1.0).epsilon(1e-8));
    CHECK((energy_y_from_masses(mu, mv, mw + d, p) - y0) / d ==
          doctest::Approx((4.0 * l + 2.0 * p.mu1) / p.mu1).epsilon(1e-8));
  }
}

TEST_CASE("diagnostic columns") {
  DiagnosticSample s;
  s.set_column("fisher_v", 2.5);
  CHECK(s.fisher_v == 2.5);
  CHECK(s.column("fisher_v") == 2.5);
  CHECK(DiagnosticSample::column_names().size() == s.values().size());
  CHECK(DiagnosticSample::column_names().front() == "t");
  CHECK_THROWS_AS(s.column("nope"), std::invalid_argument);

  DiagnosticSeries series;
  series.add(s);
  CHECK_THROWS_AS(series.add(s), std::invalid_argument);
}

TEST_CASE("series CSV round trip") {
  DiagnosticSeries series(SeriesMetadata{ModelParams{}, "dims=1 cells=8 lengths=1", "0123456789abcdef"});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    DiagnosticSample d;
    for (const auto& c : DiagnosticSample::column_names()) d.set_column(c, U(rng));
    d.t = 0.1 * k + U(rng) * 1e-3;
    series.add(d);
  }
  std::stringstream ss;
  write_series_csv(ss, series, {"config_hash 0123456789abcdef", "seed 1"});
  const auto back = read_series_csv(ss);
  REQUIRE(back.size() == series.size());
  for (std::size_t k = 0; k < back.size(); ++k) CHECK(back.samples()[k].values() == series.samples()[k].values());
  CHECK(back.metadata().config_hash == "0123456789abcdef");

  std::stringstream bad("t,l1_u\n0,abc\n");
  CHECK_THROWS(read_series_csv(bad));
}

TEST_CASE("mass inequality verdicts") {
  // Diffusion-only run decaying toward a small equilibrium.
  aalab::config::ConfigBundle b;
  b.model.chi1 = b.model.chi2 = 0.0;
  b.model.mu1 = b.model.mu2 = 8.0;
  b.domain.cells[0] = 32;
  b.run.t_end = 5.0;
  b.run.output_every = 0.25;
  b.initial.u = {2.0, 1.0, 0.1, {0.5, 0.5, 0.5}};
  b.initial.v = {2.0, 1.0, 0.1, {0.5, 0.5, 0.5}};
  b.initial.w = {2.0, 0.0, 0.1, {0.5, 0.5, 0.5}};
  const auto run = aalab::simulation::run(b);
  const auto rep = check_mass_inequality(run.series, b.model);
  INFO(rep.detail);
  CHECK(rep.verdict == Verdict::Consistent);
  CHECK(rep.sup_y == rep.y0);

  std::vector<double> t, y;
  for (int k = 0; k < 20; ++k) {
    t.push_back(k);
    y.push_back(7.0);
  }
  const auto eq = check_mass_inequality(t, y);
  CHECK(eq.verdict == Verdict::Consistent);
  CHECK(eq.sup_y == 7.0);

  for (int k = 0; k < 20; ++k) y[k] = std::ldexp(1.0, k);
  CHECK(check_mass_inequality(t, y).verdict == Verdict::Violated);
  for (int k = 0; k < 20; ++k) y[k] = 1.0 + k;
  CHECK(check_mass_inequality(t, y).verdict == Verdict::Violated);
  for (int k = 0; k < 20; ++k) y[k] = 11.0 - 10.0 * std::exp(-0.3 * k);
  CHECK(check_mass_inequality(t, y).verdict == Verdict::Consistent);
  for (int k = 0; k < 20; ++k) y[k] = 1.0 + 10.0 * std::exp(-2.0 * k);
  CHECK(check_mass_inequality(t, y).verdict == Verdict::Consistent);

  std::vector<double> t2{0.0, 1.0}, y2{1.0, 1.0};
  CHECK(check_mass_inequality(t2, y2).verdict == Verdict::Inconclusive);
  CHECK(to_string(Verdict::Violated) == "violated");
}

TEST_CASE("ODE comparison examples") {
  std::vector<double> t, z, h, zero, lin;
  for (int k = 0; k <= 1000; ++k) {
    const double s = 0.01 * k;
    t.push_back(s);
    z.push_back(std::exp(-s));
    h.push_back(0.0);
    zero.push_back(0.0);
    lin.push_back(s);
  }
  const auto a = check_ode_comparison(t, z, 1.0, 1.0, 1.0, h);
  CHECK(a.hypothesis_holds);
  CHECK(a.verdict == OdeComparisonVerdict::ConclusionHolds);
  CHECK(a.realized_max == 1.0);
  CHECK(a.bound_c == doctest::Approx(1.0));

  const auto b = check_ode_comparison(t, zero, 1.0, 1.0, 1.0, h);
  CHECK(b.verdict == OdeComparisonVerdict::ConclusionHolds);
  CHECK(b.bound_c >= 0.0);

  const auto c = check_ode_comparison(t, lin, 1.0, 1.0, 1.0, h);
  CHECK(c.verdict == OdeComparisonVerdict::HypothesisFails);
  CHECK_FALSE(c.hypothesis_holds);
  CHECK(to_string(c.verdict) == "hypothesis fails");
}

TEST_CASE("ODE comparison on synthetic cases never flags a true bound") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 30; ++k) {
    const auto cs = oracles::random_comparison_case(rng, 20.0, 4000);
    const auto rep = check_ode_comparison(cs.t, cs.z, cs.a, cs.alpha, cs.tau, cs.h);
    CHECK(rep.hypothesis_holds);
    CHECK(rep.verdict == OdeComparisonVerdict::ConclusionHolds);
    // The discrete window bound approximates the exact one.
    CHECK(rep.window_bound == doctest::Approx(cs.b_bound).epsilon(1e-3));
  }
}

TEST_CASE("ODE comparison soundness: no conclusion without the hypothesis") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> t, z, h;
    for (int j = 0; j <= 50; ++j) {
      t.push_back(0.1 * j);
      z.push_back(U(rng));
      h.push_back(U(rng) * 0.1);
    }
    const auto rep = check_ode_comparison(t, z, 1.0, 1.0, 0.5, h);
    if (!rep.hypothesis_holds) CHECK(rep.verdict == OdeComparisonVerdict::HypothesisFails);
    if (rep.verdict == OdeComparisonVerdict::ConclusionViolated ||
        rep.verdict == OdeComparisonVerdict::ConclusionHolds)
      CHECK(rep.hypothesis_holds);
  }
}

TEST_CASE("weak residuals vanish on the equilibrium and zero trajectories") {
  ModelParams p;
  const Grid g(2, {8, 6, 1}, {1.0, 1.0, 1.0});
  WeakTestFunction phi;
  phi.modes = {1, 2, 0};
  phi.horizon = 1.0;
  phi.amplitude = 1.3;
  std::vector<FieldState> eq, zero;
  for (int k = 0; k <= 10; ++k) {
    eq.push_back(constant_state(g, 2.0, 2.0, 4.0, 0.1 * k));
    zero.push_back(constant_state(g, 0.0, 0.0, 0.0, 0.1 * k));
  }
  eq.back().t = zero.back().t = 1.0;
  const auto a = weak_residuals(eq, p, phi);
  CHECK(a.r1 <= 1e-10);
  CHECK(a.r2 <= 1e-10);
  CHECK(a.r3 <= 1e-10);
  const auto z = weak_residuals(zero, p, phi);
  CHECK(z.r1 == 0.0);
  CHECK(z.r2 == 0.0);
  CHECK(z.r3 == 0.0);

  ModelParams cubic;
  cubic.r1 = 3.0;
  CHECK_THROWS_AS(weak_residuals(eq, cubic, phi), std::invalid_argument);
  std::vector<FieldState> short_traj(eq.begin(), eq.begin() + 5);
  CHECK_THROWS(weak_residuals(short_traj, p, phi));
}

TEST_CASE("weak residuals are independent of chunking and shrink with dt") {
  ModelParams p;
  p.r = 0.5;
  WeakTestFunction phi;
  phi.horizon = 0.5;
  const auto traj = stepped_trajectory(p, 0.01, 0.5);
  const auto whole = weak_residuals(traj, p, phi);
  WeakResidualAccumulator acc(p, phi);
  const std::size_t cut = traj.size() / 3;
  for (std::size_t k = 0; k < cut; ++k) acc.add(traj[k]);
  for (std::size_t k = cut; k < traj.size(); ++k) acc.add(traj[k]);
  const auto parts = acc.residuals();
  CHECK(std::abs(parts.r1 - whole.r1) <= 1e-14);
  CHECK(std::abs(parts.r2 - whole.r2) <= 1e-14);
  CHECK(std::abs(parts.r3 - whole.r3) <= 1e-14);
  CHECK(weak_residuals(traj, p, phi).r1 == whole.r1);

  const auto finer = weak_residuals(stepped_trajectory(p, 0.005, 0.5), p, phi);
  CHECK(finer.r1 < whole.r1);
  CHECK(finer.r2 < whole.r2);
  CHECK(finer.r3 < whole.r3);
}

TEST_CASE("classify_run examples and scale invariance") {
  CHECK(classify_run(linf_series({1, 1, 1, 1}), StepStatus::BlowupDetected) == Classification::BlowUp);
  CHECK(classify_run(linf_series(std::vector<double>(20, 3.0)), StepStatus::Advanced) == Classification::Bounded);

  std::vector<double> grow;
  for (int k = 0; k < 40; ++k) grow.push_back(std::pow(1.1, k / 10.0));
  CHECK(classify_run(linf_series(grow), StepStatus::Advanced) == Classification::GrowthSuspected);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.5, 1.5);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> s;
    for (int j = 0; j < 24; ++j) s.push_back(U(rng));
    const double scale = std::exp(U(rng) * 10.0 - 5.0);
    std::vector<double> scaled = s;
    for (double& x : scaled) x *= scale;
    CHECK(classify_run(linf_series(s), StepStatus::Advanced) ==
          classify_run(linf_series(scaled), StepStatus::Advanced));
  }
  CHECK(to_string(Classification::GrowthSuspected) == "GrowthSuspected");
}
