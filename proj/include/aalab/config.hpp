#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "aalab/toml_lite.hpp"

namespace aalab::config {

/// Coefficients of the three-component chemotaxis system
///
///   u_t = Δu - chi1 ∇·(u F(u) ∇w) + w - mu1 u^r1
///   v_t = Δv - chi2 ∇·(v F(v) ∇w) + w + r u v - mu2 v^r2
///   w_t = Δw + u + v - w
///
/// with F(s) = (1 + epsilon s)^-(dim_n + 1). `dim_n` is the analytic dimension
/// used by F and by the damping threshold; it is independent of the simulated
/// grid dimension.
///
/// The threshold statement compares min{mu1, mu2} against the damping
/// threshold; the printed "min{mu1, mu1}" and "mu1 mu1^2" in the source text
/// are read as min{mu1, mu2} and mu1 mu2^2.
struct ModelParams {
  double chi1 = 1.0;
  double chi2 = 1.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  double r1 = 2.0;
  double r2 = 2.0;
  double r = 0.0;
  double epsilon = 0.0;
  int dim_n = 3;
  /// Maximal-regularity constant C_{N/2+1}. No value is known; 1.0 is a
  /// placeholder scale.
  double c_sobolev = 1.0;

  bool operator==(const ModelParams&) const = default;
};

struct DomainSpec {
  int dims = 1;
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  std::array<int, 3> cells{64, 64, 64};
  std::int64_t max_cells = 4'000'000;

  std::int64_t total_cells() const;
  bool operator==(const DomainSpec&) const = default;
};

enum class FluxScheme { Central, Upwind };

std::string to_string(FluxScheme s);
FluxScheme flux_scheme_from_string(const std::string& s);

struct RunSpec {
  double t_end = 1.0;
  double dt_max = 1e-2;
  double cfl_advection = 0.4;
  double cfl_reaction = 0.4;
  double output_every = 0.1;
  double snapshot_every = 0.0;
  double blowup_linf = 1e8;
  double linear_tol = 1e-10;
  std::uint64_t seed = 1;
  FluxScheme scheme = FluxScheme::Central;
  /// Bounded iff max of Linf(u)+Linf(v) over the last quarter of samples is at
  /// most this factor times the max over the second quarter.
  double classify_ratio = 1.05;

  bool operator==(const RunSpec&) const = default;
};

enum class InitialKind { Constant, CosineBump, GaussianBumps, RandomPerturbation, FromSnapshot };

std::string to_string(InitialKind k);
InitialKind initial_kind_from_string(const std::string& s);

/// Per-component initial profile parameters.
///
/// constant:            base
/// cosine-bump:         base + amplitude * prod_d cos(mode pi x_d / L_d)
/// gaussian-bumps:      base + amplitude * sum_b exp(-|x - c_b|^2 / (2 width^2))
/// random-perturbation: base * (1 + amplitude * U(-1, 1)) per cell
struct ComponentInit {
  double base = 1.0;
  double amplitude = 0.0;
  double width = 0.1;
  /// Bump centre as a fraction of each axis length.
  std::array<double, 3> center{0.5, 0.5, 0.5};

  bool operator==(const ComponentInit&) const = default;
};

struct InitialData {
  InitialKind kind = InitialKind::CosineBump;
  ComponentInit u{1.0, 0.5, 0.1, {0.5, 0.5, 0.5}};
  ComponentInit v{1.0, 0.5, 0.1, {0.5, 0.5, 0.5}};
  ComponentInit w{1.0, 0.0, 0.1, {0.5, 0.5, 0.5}};
  int mode = 1;
  /// Number of gaussian bumps; the first sits at `center`, the rest are placed
  /// from the run seed.
  int bumps = 1;
  std::string snapshot;

  bool operator==(const InitialData&) const = default;
};

struct ConfigBundle {
  ModelParams model;
  DomainSpec domain;
  RunSpec run;
  InitialData initial;

  bool operator==(const ConfigBundle&) const = default;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  bool contains(const std::string& fragment) const;
  std::string to_string() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::vector<std::string> details = {})
      : std::runtime_error(what), details_(std::move(details)) {}
  const std::vector<std::string>& details() const { return details_; }

 private:
  std::vector<std::string> details_;
};

ValidationReport validate(const ModelParams& params, const DomainSpec& domain, const RunSpec& run);

/// Also checks the static initial-data parameters.
ValidationReport validate(const ConfigBundle& bundle);

/// Strict conversion: unknown sections or keys are fatal. Does not validate.
ConfigBundle from_document(const toml::Document& doc);

/// Parses TOML text, applies `section.key=value` overrides, and validates.
ConfigBundle parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

ConfigBundle load_config(const std::filesystem::path& path,
                         const std::vector<std::string>& overrides = {});

std::string write_config(const ConfigBundle& bundle);

/// Applies `section.key=value` to a parsed document.
void apply_override(toml::Document& doc, const std::string& assignment);

/// Short hex digest of the canonical serialisation.
std::string config_hash(const ConfigBundle& bundle);

/// Number of worker threads from AA_LAB_THREADS, or `fallback`.
unsigned threads_from_env(unsigned fallback);

}  // namespace aalab::config
