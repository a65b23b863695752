#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <vector>

#include "aalab/config.hpp"

namespace aalab::fields {

/// Cell-centred Cartesian grid on [0, L_0] x ... with one ghost layer per face
/// on every active axis. Storage is row-major with axis 0 slowest.
class Grid {
 public:
  Grid() = default;
  Grid(int dims, std::array<int, 3> cells, std::array<double, 3> lengths);
  explicit Grid(const config::DomainSpec& d);

  int dims() const { return dims_; }
  int cells(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double length(int axis) const { return len_[axis]; }
  double min_spacing() const;
  double cell_volume() const { return vol_; }
  double domain_volume() const { return vol_ * static_cast<double>(interior_count()); }
  std::size_t interior_count() const;
  std::size_t storage_size() const { return padded_[0] * padded_[1] * padded_[2]; }
  std::size_t stride(int axis) const { return stride_[axis]; }

  /// Storage offset for interior coordinates; -1 and n address ghosts on active axes.
  std::size_t index(int i, int j = 0, int k = 0) const {
    return static_cast<std::size_t>(i + off_[0]) * stride_[0] + static_cast<std::size_t>(j + off_[1]) * stride_[1] +
           static_cast<std::size_t>(k + off_[2]);
  }

  /// Cell-centre coordinate along `axis`.
  double center(int axis, int i) const { return (i + 0.5) * h_[axis]; }

  /// Calls fn(i, j, k, offset) for every interior cell in storage order.
  template <typename Fn>
  void for_each_cell(Fn&& fn) const {
    for (int i = 0; i < n_[0]; ++i)
      for (int j = 0; j < n_[1]; ++j)
        for (int k = 0; k < n_[2]; ++k) fn(i, j, k, index(i, j, k));
  }

  bool operator==(const Grid& o) const { return dims_ == o.dims_ && n_ == o.n_ && len_ == o.len_; }

 private:
  int dims_ = 1;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> len_{1.0, 1.0, 1.0};
  std::array<double, 3> h_{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> padded_{1, 1, 1};
  std::array<std::size_t, 3> stride_{1, 1, 1};
  std::array<int, 3> off_{0, 0, 0};
  double vol_ = 1.0;
};

class Field {
 public:
  Field() = default;
  explicit Field(const Grid& g, double value = 0.0) : grid_(g), data_(g.storage_size(), value) {}

  const Grid& grid() const { return grid_; }
  double& operator[](std::size_t off) { return data_[off]; }
  double operator[](std::size_t off) const { return data_[off]; }
  double& at(int i, int j = 0, int k = 0) { return data_[grid_.index(i, j, k)]; }
  double at(int i, int j = 0, int k = 0) const { return data_[grid_.index(i, j, k)]; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  /// Homogeneous Neumann: every ghost mirrors its adjacent interior cell.
  void fill_ghosts();

  double min() const;
  double max() const;
  bool all_finite() const;
  /// Interior values in storage order.
  std::vector<double> interior() const;

 private:
  Grid grid_;
  std::vector<double> data_;
};

struct FieldState {
  Field u;
  Field v;
  Field w;
  double t = 0.0;

  const Grid& grid() const { return u.grid(); }
  void fill_ghosts();
  double min() const;
};

Field fill_ghosts(Field f);

/// Second-order 3/5/7-point Laplacian. Ghosts must be filled.
Field laplacian(const Field& f);

/// F(s) = (1 + eps s)^-(N+1); negative s is treated as 0.
double f_eps(double s, double eps, int dim_n);

/// -chi div(rho F(rho) grad w) with face gradients by central difference and
/// face density by arithmetic mean or donor cell. Ghosts must be filled.
Field chemotactic_divergence(const Field& density, const Field& w, double chi, double eps, int dim_n,
                             config::FluxScheme scheme);

/// Volume-weighted L^p norm; p = infinity gives max |f|.
double lp_norm(const Field& f, double p);
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Sum f * vol.
double integral(const Field& f);

/// Sum over interior faces of (df/h)^2 * vol. Boundary faces carry zero flux.
double grad_sq_integral(const Field& f);

/// Sum over interior faces of (da/h)(db/h) * vol.
double face_gradient_product(const Field& a, const Field& b);

struct EntropyFisher {
  double entropy = 0.0;
  double fisher = 0.0;
};

/// (sum f ln f vol, sum_faces (df/h)^2 / f_face vol) with 0 ln 0 = 0 and the
/// face density the harmonic mean; faces with harmonic mean below 1e-14 are
/// skipped.
EntropyFisher entropy_and_fisher(const Field& f);

/// Snapshot: text header "AALAB1 dims n1 [n2 [n3]] t\n", then little-endian
/// doubles for u, v, w in row-major interior order.
void write_snapshot(const std::filesystem::path& path, const FieldState& s);

/// Reads a snapshot onto `grid`; cell counts must match.
FieldState read_snapshot(const std::filesystem::path& path, const Grid& grid);

}  // namespace aalab::fields
