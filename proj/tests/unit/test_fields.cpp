#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "aalab/fields.hpp"

using namespace aalab::fields;
using aalab::config::FluxScheme;

namespace {

constexpr double kPi = std::numbers::pi;

Field sample_1d(const Grid& g, double (*fn)(double)) {
  Field f(g);
  for (int i = 0; i < g.cells(0); ++i) f.at(i) = fn(g.center(0, i));
  f.fill_ghosts();
  return f;
}

Field random_field(const Grid& g, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  Field f(g);
  g.for_each_cell([&](int, int, int, std::size_t o) { f[o] = U(rng); });
  f.fill_ghosts();
  return f;
}

Grid grid_of(int dims, int n, double len = 1.0) { return Grid(dims, {n, n + 1, n + 2}, {len, 1.3 * len, 0.7 * len}); }

}  // namespace

TEST_CASE("grid geometry") {
  Grid g(2, {4, 8, 1}, {1.0, 2.0, 1.0});
  CHECK(g.spacing(0) == 0.25);
  CHECK(g.spacing(1) == 0.25);
  CHECK(g.cell_volume() == doctest::Approx(0.0625));
  CHECK(g.domain_volume() == doctest::Approx(2.0));
  CHECK(g.interior_count() == 32);
  CHECK(g.storage_size() == 6 * 10);
  CHECK_THROWS(Grid(0, {4, 4, 4}, {1, 1, 1}));
  CHECK_THROWS(Grid(1, {4, 4, 4}, {-1, 1, 1}));
}

TEST_CASE("fill_ghosts mirrors the adjacent interior cell") {
  Grid g(1, {3, 1, 1}, {1.0, 1.0, 1.0});
  Field f(g);
  f.at(0) = 1;
  f.at(1) = 2;
  f.at(2) = 3;
  f.fill_ghosts();
  CHECK(f.at(-1) == 1);
  CHECK(f.at(3) == 3);

  Field c(grid_of(3, 5), 2.5);
  c.fill_ghosts();
  for (double x : c.raw()) CHECK(x == 2.5);

  // Linear in x: zero normal difference across every boundary face.
  const Grid g2 = grid_of(2, 6);
  Field lin(g2);
  g2.for_each_cell([&](int i, int j, int, std::size_t o) { lin[o] = 3.0 * g2.center(0, i) - g2.center(1, j); });
  lin.fill_ghosts();
  for (int j = 0; j < g2.cells(1); ++j) {
    CHECK(lin.at(-1, j) - lin.at(0, j) == 0.0);
    CHECK(lin.at(g2.cells(0), j) - lin.at(g2.cells(0) - 1, j) == 0.0);
  }
  for (int i = 0; i < g2.cells(0); ++i) {
    CHECK(lin.at(i, -1) - lin.at(i, 0) == 0.0);
    CHECK(lin.at(i, g2.cells(1)) - lin.at(i, g2.cells(1) - 1) == 0.0);
  }
}

TEST_CASE("laplacian of a constant is zero") {
  for (int d = 1; d <= 3; ++d) {
    Field c(grid_of(d, 6), 4.2);
    const Field l = laplacian(c);
    l.grid().for_each_cell([&](int, int, int, std::size_t o) { CHECK(l[o] == 0.0); });
  }
}

TEST_CASE("laplacian of the cosine mode converges at second order") {
  std::vector<double> err;
  for (int n : {16, 32, 64, 128}) {
    const Grid g(1, {n, 1, 1}, {1.0, 1.0, 1.0});
    const Field f = sample_1d(g, [](double x) { return std::cos(kPi * x); });
    const Field l = laplacian(f);
    double e = 0.0;
    g.for_each_cell([&](int, int, int, std::size_t o) { e = std::max(e, std::abs(l[o] + kPi * kPi * f[o])); });
    err.push_back(e);
  }
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double order = std::log2(err[k - 1] / err[k]);
    CHECK(order >= 1.9);
    CHECK(order <= 2.1);
  }
}

TEST_CASE("laplacian of x^2 is 2 except where the Neumann mirror disagrees") {
  const Grid g(1, {32, 1, 1}, {1.0, 1.0, 1.0});
  const Field f = sample_1d(g, [](double x) { return x * x; });
  const Field l = laplacian(f);
  // x^2 has zero slope at x = 0, so the left mirror is exact.
  for (int i = 0; i < 31; ++i) CHECK(l.at(i) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(l.at(31) - 2.0) > 0.1);
}

TEST_CASE("chemotactic divergence special cases") {
  const Grid g(1, {64, 1, 1}, {1.0, 1.0, 1.0});
  const Field w = sample_1d(g, [](double x) { return std::cos(kPi * x); });
  const Field flat(g, 3.0);
  const Field zero(g, 0.0);
  for (auto scheme : {FluxScheme::Central, FluxScheme::Upwind}) {
    const Field a = chemotactic_divergence(w, flat, 2.0, 0.1, 3, scheme);
    const Field b = chemotactic_divergence(zero, w, 2.0, 0.1, 3, scheme);
    g.for_each_cell([&](int, int, int, std::size_t o) {
      CHECK(a[o] == 0.0);
      CHECK(b[o] == 0.0);
    });
  }
  const Field one(g, 1.0);
  const double chi = 1.7;
  const Field c = chemotactic_divergence(one, w, chi, 0.0, 3, FluxScheme::Central);
  const Field l = laplacian(w);
  g.for_each_cell([&](int, int, int, std::size_t o) { CHECK(std::abs(c[o] + chi * l[o]) <= 1e-10 * kPi * kPi); });
}

TEST_CASE("f_eps values and monotonicity") {
  CHECK(f_eps(123.0, 0.0, 3) == 1.0);
  CHECK(f_eps(1.0, 1.0, 3) == 0.0625);
  CHECK(f_eps(0.0, 0.7, 5) == 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    const double s = U(rng), e = U(rng) / 10.0, ds = U(rng), de = U(rng) / 10.0;
    const int n = 1 + i % 5;
    const double f = f_eps(s, e, n);
    CHECK(f > 0.0);
    CHECK(f <= 1.0);
    CHECK(f_eps(s + ds, e, n) <= f);
    CHECK(f_eps(s, e + de, n) <= f);
  }
}

TEST_CASE("lp_norm examples") {
  const Grid unit(2, {8, 8, 1}, {1.0, 1.0, 1.0});
  const Field c(unit, -1.5);
  for (double p : {1.0, 2.0, 3.5, kInfinity}) CHECK(lp_norm(c, p) == doctest::Approx(1.5).epsilon(1e-14));
  const Grid two(1, {10, 1, 1}, {2.0, 1.0, 1.0});
  CHECK(lp_norm(Field(two, 3.0), 2.0) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
  const Grid fine(1, {1024, 1, 1}, {1.0, 1.0, 1.0});
  const Field x = sample_1d(fine, [](double s) { return s; });
  CHECK(std::abs(lp_norm(x, 1.0) - 0.5) <= 1e-6);
  CHECK(integral(x) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS(lp_norm(x, 0.5));
}

TEST_CASE("lp_norm is monotone in p on a unit domain") {
  std::mt19937_64 rng(4);
  const Grid g = Grid(3, {5, 4, 3}, {1.0, 1.0, 1.0});
  for (int k = 0; k < 20; ++k) {
    const Field f = random_field(g, rng, -2.0, 2.0);
    double prev = 0.0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 7.0, kInfinity}) {
      const double n = lp_norm(f, p);
      CHECK(prev <= n + 1e-12);
      prev = n;
    }
  }
}

TEST_CASE("grad_sq_integral") {
  const Grid g(1, {256, 1, 1}, {1.0, 1.0, 1.0});
  CHECK(grad_sq_integral(Field(g, 7.0)) == 0.0);
  // Boundary faces carry no flux, so a linear profile loses one face of
  // width h: the discrete value is exactly 1 - h.
  const Field x = sample_1d(g, [](double s) { return s; });
  CHECK(grad_sq_integral(x) == doctest::Approx(1.0 - 1.0 / 256).epsilon(1e-12));

  std::vector<double> err;
  for (int n : {64, 128, 256}) {
    const Grid gn(1, {n, 1, 1}, {1.0, 1.0, 1.0});
    const Field f = sample_1d(gn, [](double s) { return std::cos(kPi * s); });
    err.push_back(std::abs(grad_sq_integral(f) - kPi * kPi / 2.0));
  }
  CHECK(err[2] < 1e-3);
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("entropy and Fisher information") {
  const Grid g(2, {8, 8, 1}, {1.0, 1.0, 1.0});
  auto a = entropy_and_fisher(Field(g, 1.0));
  CHECK(a.entropy == doctest::Approx(0.0));
  CHECK(a.fisher == 0.0);
  auto b = entropy_and_fisher(Field(g, std::exp(1.0)));
  CHECK(b.entropy == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(b.fisher == 0.0);
  auto z = entropy_and_fisher(Field(g, 0.0));
  CHECK(z.entropy == 0.0);
  CHECK(z.fisher == 0.0);

  // Reference: Simpson quadrature of (pi/2 sin)^2 / (1 + cos/2) on a fine mesh.
  auto integrand = [](double x) {
    const double d = 0.5 * kPi * std::sin(kPi * x);
    return d * d / (1.0 + 0.5 * std::cos(kPi * x));
  };
  const int m = 200000;
  double simpson = integrand(0.0) + integrand(1.0);
  for (int k = 1; k < m; ++k) simpson += (k % 2 ? 4.0 : 2.0) * integrand(static_cast<double>(k) / m);
  simpson /= 3.0 * m;
  const Grid g256(1, {256, 1, 1}, {1.0, 1.0, 1.0});
  const Field f = sample_1d(g256, [](double x) { return 1.0 + 0.5 * std::cos(kPi * x); });
  CHECK(entropy_and_fisher(f).fisher == doctest::Approx(simpson).epsilon(0.01));
}

TEST_CASE("discrete integration by parts and conservation on random fields") {
  std::mt19937_64 rng(8);
  for (int dims = 1; dims <= 3; ++dims) {
    for (int rep = 0; rep < 5; ++rep) {
      const Grid g = grid_of(dims, dims == 3 ? 6 : 12);
      const Field a = random_field(g, rng, -1.0, 1.0);
      const Field b = random_field(g, rng, -1.0, 1.0);
      const Field rho = random_field(g, rng, 0.0, 2.0);
      const Field lb = laplacian(b);
      double lhs = 0.0, scale = 0.0;
      g.for_each_cell([&](int, int, int, std::size_t o) {
        lhs += a[o] * lb[o];
        scale += std::abs(a[o] * lb[o]);
      });
      lhs *= g.cell_volume();
      scale *= g.cell_volume();
      CHECK(std::abs(lhs + face_gradient_product(a, b)) <= 1e-10 * scale);
      CHECK(std::abs(integral(lb)) <= 1e-10 * scale);
      for (auto scheme : {FluxScheme::Central, FluxScheme::Upwind}) {
        const Field c = chemotactic_divergence(rho, b, 1.3, 0.2, 3, scheme);
        double s = 0.0, sa = 0.0;
        g.for_each_cell([&](int, int, int, std::size_t o) {
          s += c[o];
          sa += std::abs(c[o]);
        });
        CHECK(std::abs(s) <= 1e-10 * sa);
      }
    }
  }
}

TEST_CASE("snapshot round trip and format errors") {
  const auto dir = std::filesystem::temp_directory_path() / "aalab_test_fields";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(12);
  const Grid g = grid_of(2, 5);
  FieldState s{random_field(g, rng), random_field(g, rng), random_field(g, rng), 1.0 / 3.0};
  write_snapshot(dir / "s.bin", s);
  {
    std::ifstream in(dir / "s.bin", std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("AALAB1 2 5 6 ", 0) == 0);
  }
  const FieldState back = read_snapshot(dir / "s.bin", g);
  CHECK(back.t == s.t);
  g.for_each_cell([&](int, int, int, std::size_t o) {
    CHECK(back.u[o] == s.u[o]);
    CHECK(back.v[o] == s.v[o]);
    CHECK(back.w[o] == s.w[o]);
  });
  CHECK_THROWS(read_snapshot(dir / "s.bin", grid_of(2, 6)));
  CHECK_THROWS(read_snapshot(dir / "s.bin", grid_of(1, 5)));
  CHECK_THROWS(read_snapshot(dir / "missing.bin", g));
  {
    std::ofstream t(dir / "trunc.bin", std::ios::binary);
    t << "AALAB1 2 5 6 0\n" << "short";
  }
  CHECK_THROWS(read_snapshot(dir / "trunc.bin", g));
}
