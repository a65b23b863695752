#include "aalab/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aalab::fields {

Grid::Grid(int dims, std::array<int, 3> cells, std::array<double, 3> lengths) : dims_(dims) {
  if (dims < 1 || dims > 3) throw std::invalid_argument("Grid: dims must be 1, 2, or 3");
  for (int d = 0; d < 3; ++d) {
    const bool active = d < dims;
    if (active && (cells[d] < 1 || !(lengths[d] > 0.0))) {
      throw std::invalid_argument("Grid: cells and lengths must be positive on active axes");
    }
    n_[d] = active ? cells[d] : 1;
    len_[d] = active ? lengths[d] : 1.0;
    h_[d] = active ? lengths[d] / cells[d] : 1.0;
    padded_[d] = active ? static_cast<std::size_t>(cells[d]) + 2 : 1;
    off_[d] = active ? 1 : 0;
  }
  stride_[2] = 1;
  stride_[1] = padded_[2];
  stride_[0] = padded_[1] * padded_[2];
  vol_ = 1.0;
  for (int d = 0; d < dims; ++d) vol_ *= h_[d];
}

Grid::Grid(const config::DomainSpec& d) : Grid(d.dims, d.cells, d.lengths) {}

double Grid::min_spacing() const {
  double h = h_[0];
  for (int d = 1; d < dims_; ++d) h = std::min(h, h_[d]);
  return h;
}

std::size_t Grid::interior_count() const {
  return static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(n_[1]) * static_cast<std::size_t>(n_[2]);
}

void Field::fill_ghosts() {
  const Grid& g = grid_;
  for (int d = 0; d < g.dims(); ++d) {
    const int a1 = (d + 1) % 3;
    const int a2 = (d + 2) % 3;
    const int n = g.cells(d);
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    for (int p = 0; p < g.cells(a1); ++p) {
      for (int q = 0; q < g.cells(a2); ++q) {
        lo[a1] = hi[a1] = p;
        lo[a2] = hi[a2] = q;
        lo[d] = -1;
        hi[d] = n;
        const std::size_t glo = g.index(lo[0], lo[1], lo[2]);
        const std::size_t ghi = g.index(hi[0], hi[1], hi[2]);
        data_[glo] = data_[glo + g.stride(d)];
        data_[ghi] = data_[ghi - g.stride(d)];
      }
    }
  }
}

double Field::min() const {
  double m = std::numeric_limits<double>::infinity();
  grid_.for_each_cell([&](int, int, int, std::size_t o) { m = std::min(m, data_[o]); });
  return m;
}

double Field::max() const {
  double m = -std::numeric_limits<double>::infinity();
  grid_.for_each_cell([&](int, int, int, std::size_t o) { m = std::max(m, data_[o]); });
  return m;
}

bool Field::all_finite() const {
  bool ok = true;
  grid_.for_each_cell([&](int, int, int, std::size_t o) { ok = ok && std::isfinite(data_[o]); });
  return ok;
}

std::vector<double> Field::interior() const {
  std::vector<double> out;
  out.reserve(grid_.interior_count());
  grid_.for_each_cell([&](int, int, int, std::size_t o) { out.push_back(data_[o]); });
  return out;
}

void FieldState::fill_ghosts() {
  u.fill_ghosts();
  v.fill_ghosts();
  w.fill_ghosts();
}

double FieldState::min() const { return std::min({u.min(), v.min(), w.min()}); }

Field fill_ghosts(Field f) {
  f.fill_ghosts();
  return f;
}

Field laplacian(const Field& f) {
  const Grid& g = f.grid();
  Field out(g);
  std::array<double, 3> inv_h2{};
  for (int d = 0; d < g.dims(); ++d) inv_h2[d] = 1.0 / (g.spacing(d) * g.spacing(d));
  const int dims = g.dims();
  g.for_each_cell([&](int, int, int, std::size_t o) {
    double s = 0.0;
    for (int d = 0; d < dims; ++d) {
      const std::size_t st = g.stride(d);
      s += (f[o + st] - 2.0 * f[o] + f[o - st]) * inv_h2[d];
    }
    out[o] = s;
  });
  return out;
}

double f_eps(double s, double eps, int dim_n) {
  if (eps == 0.0) return 1.0;
  return std::pow(1.0 + eps * std::max(s, 0.0), -(dim_n + 1.0));
}

namespace {

// Calls fn(lo_offset, hi_offset, axis) for every face shared by two interior cells.
template <typename Fn>
void for_each_interior_face(const Grid& g, Fn&& fn) {
  const int dims = g.dims();
  g.for_each_cell([&](int i, int j, int k, std::size_t o) {
    const int c[3] = {i, j, k};
    for (int d = 0; d < dims; ++d) {
      if (c[d] + 1 < g.cells(d)) fn(o, o + g.stride(d), d);
    }
  });
}

}  // namespace

Field chemotactic_divergence(const Field& density, const Field& w, double chi, double eps, int dim_n,
                             config::FluxScheme scheme) {
  const Grid& g = density.grid();
  Field out(g);
  const bool upwind = scheme == config::FluxScheme::Upwind;
  for_each_interior_face(g, [&](std::size_t a, std::size_t b, int d) {
    const double h = g.spacing(d);
    const double grad = (w[b] - w[a]) / h;
    if (grad == 0.0) return;
    double rho;
    if (upwind) {
      rho = grad > 0.0 ? density[a] : density[b];
    } else {
      rho = 0.5 * (density[a] + density[b]);
    }
    const double flux = chi * rho * f_eps(rho, eps, dim_n) * grad;
    out[a] -= flux / h;
    out[b] += flux / h;
  });
  return out;
}

double lp_norm(const Field& f, double p) {
  const Grid& g = f.grid();
  if (std::isinf(p)) {
    double m = 0.0;
    g.for_each_cell([&](int, int, int, std::size_t o) { m = std::max(m, std::abs(f[o])); });
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0.0;
  if (p == 1.0) {
    g.for_each_cell([&](int, int, int, std::size_t o) { s += std::abs(f[o]); });
    return s * g.cell_volume();
  }
  if (p == 2.0) {
    g.for_each_cell([&](int, int, int, std::size_t o) { s += f[o] * f[o]; });
    return std::sqrt(s * g.cell_volume());
  }
  g.for_each_cell([&](int, int, int, std::size_t o) { s += std::pow(std::abs(f[o]), p); });
  return std::pow(s * g.cell_volume(), 1.0 / p);
}

double integral(const Field& f) {
  double s = 0.0;
  f.grid().for_each_cell([&](int, int, int, std::size_t o) { s += f[o]; });
  return s * f.grid().cell_volume();
}

double face_gradient_product(const Field& a, const Field& b) {
  const Grid& g = a.grid();
  double s = 0.0;
  for_each_interior_face(g, [&](std::size_t lo, std::size_t hi, int d) {
    const double h2 = g.spacing(d) * g.spacing(d);
    s += (a[hi] - a[lo]) * (b[hi] - b[lo]) / h2;
  });
  return s * g.cell_volume();
}

double grad_sq_integral(const Field& f) { return face_gradient_product(f, f); }

EntropyFisher entropy_and_fisher(const Field& f) {
  const Grid& g = f.grid();
  EntropyFisher r;
  g.for_each_cell([&](int, int, int, std::size_t o) {
    const double x = f[o];
    if (x > 0.0) r.entropy += x * std::log(x);
  });
  r.entropy *= g.cell_volume();
  for_each_interior_face(g, [&](std::size_t lo, std::size_t hi, int d) {
    const double a = f[lo];
    const double b = f[hi];
    const double sum = a + b;
    if (!(sum > 0.0)) return;
    const double hm = 2.0 * a * b / sum;
    if (hm < 1e-14) return;
    const double grad = (b - a) / g.spacing(d);
    r.fisher += grad * grad / hm;
  });
  r.fisher *= g.cell_volume();
  return r;
}

namespace {

std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y |= ((x >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return y;
  }
  return x;
}

void write_block(std::ostream& out, const Field& f) {
  f.grid().for_each_cell([&](int, int, int, std::size_t o) {
    std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(f[o]));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  });
}

void read_block(std::istream& in, Field& f, const std::filesystem::path& path) {
  f.grid().for_each_cell([&](int, int, int, std::size_t o) {
    char buf[8];
    if (!in.read(buf, 8)) throw std::runtime_error("snapshot '" + path.string() + "' is truncated");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    f[o] = std::bit_cast<double>(to_little_endian(bits));
  });
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const FieldState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open snapshot '" + path.string() + "' for writing");
  const Grid& g = s.grid();
  std::ostringstream head;
  head << "AALAB1 " << g.dims();
  for (int d = 0; d < g.dims(); ++d) head << ' ' << g.cells(d);
  char tbuf[40];
  std::snprintf(tbuf, sizeof(tbuf), " %.17g\n", s.t);
  head << tbuf;
  out << head.str();
  write_block(out, s.u);
  write_block(out, s.v);
  write_block(out, s.w);
  if (!out) throw std::runtime_error("write failed for snapshot '" + path.string() + "'");
}

FieldState read_snapshot(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot '" + path.string() + "'");
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("snapshot '" + path.string() + "' has no header");
  std::istringstream hs(header);
  std::string magic;
  int dims = 0;
  hs >> magic >> dims;
  if (magic != "AALAB1" || dims < 1 || dims > 3) {
    throw std::runtime_error("snapshot '" + path.string() + "' has a malformed header");
  }
  if (dims != grid.dims()) throw std::runtime_error("snapshot '" + path.string() + "' dimension mismatch");
  for (int d = 0; d < dims; ++d) {
    int n = 0;
    hs >> n;
    if (n != grid.cells(d)) throw std::runtime_error("snapshot '" + path.string() + "' cell count mismatch");
  }
  FieldState s{Field(grid), Field(grid), Field(grid), 0.0};
  if (!(hs >> s.t)) throw std::runtime_error("snapshot '" + path.string() + "' header lacks time");
  read_block(in, s.u, path);
  read_block(in, s.v, path);
  read_block(in, s.w, path);
  s.fill_ghosts();
  return s;
}

}  // namespace aalab::fields
