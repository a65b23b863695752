#include "aalab/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace aalab::config {

std::int64_t DomainSpec::total_cells() const {
  std::int64_t n = 1;
  for (int d = 0; d < dims && d < 3; ++d) n *= cells[d];
  return n;
}

std::string to_string(FluxScheme s) { return s == FluxScheme::Central ? "central" : "upwind"; }

FluxScheme flux_scheme_from_string(const std::string& s) {
  if (s == "central") return FluxScheme::Central;
  if (s == "upwind") return FluxScheme::Upwind;
  throw ConfigError("unknown scheme '" + s + "' (expected central or upwind)");
}

std::string to_string(InitialKind k) {
  switch (k) {
    case InitialKind::Constant: return "constant";
    case InitialKind::CosineBump: return "cosine-bump";
    case InitialKind::GaussianBumps: return "gaussian-bumps";
    case InitialKind::RandomPerturbation: return "random-perturbation";
    case InitialKind::FromSnapshot: return "from-snapshot";
  }
  return "constant";
}

InitialKind initial_kind_from_string(const std::string& s) {
  if (s == "constant") return InitialKind::Constant;
  if (s == "cosine-bump") return InitialKind::CosineBump;
  if (s == "gaussian-bumps") return InitialKind::GaussianBumps;
  if (s == "random-perturbation") return InitialKind::RandomPerturbation;
  if (s == "from-snapshot") return InitialKind::FromSnapshot;
  throw ConfigError("unknown initial kind '" + s + "'");
}

bool ValidationReport::contains(const std::string& fragment) const {
  for (const auto& v : violations) {
    if (v.find(fragment) != std::string::npos) return true;
  }
  return false;
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const auto& v : violations) out += "  - " + v + "\n";
  return out;
}

namespace {

void require(ValidationReport& rep, bool cond, const std::string& msg) {
  if (!cond) rep.violations.push_back(msg);
}

bool finite(double x) { return std::isfinite(x); }

void validate_component(ValidationReport& rep, const ComponentInit& c, const std::string& name,
                        InitialKind kind, int dims) {
  require(rep, finite(c.base) && c.base >= 0.0, name + "_base must be ≥ 0");
  switch (kind) {
    case InitialKind::CosineBump:
      require(rep, std::abs(c.amplitude) <= c.base,
              name + "_amplitude must satisfy |amplitude| ≤ base for a nonnegative profile");
      break;
    case InitialKind::GaussianBumps:
      require(rep, c.amplitude >= 0.0, name + "_amplitude must be ≥ 0");
      require(rep, c.width > 0.0, name + "_width must be > 0");
      break;
    case InitialKind::RandomPerturbation:
      require(rep, c.amplitude >= 0.0 && c.amplitude <= 1.0, name + "_amplitude must lie in [0, 1]");
      break;
    default: break;
  }
  for (int d = 0; d < dims; ++d) {
    require(rep, c.center[d] >= 0.0 && c.center[d] <= 1.0,
            name + "_center[" + std::to_string(d) + "] must lie in [0, 1]");
  }
}

}  // namespace

ValidationReport validate(const ModelParams& p, const DomainSpec& domain, const RunSpec& run) {
  ValidationReport rep;
  require(rep, p.chi1 > 0.0, "chi1 must be > 0");
  require(rep, p.chi2 > 0.0, "chi2 must be > 0");
  require(rep, p.mu1 > 0.0, "mu1 must be > 0");
  require(rep, p.mu2 > 0.0, "mu2 must be > 0");
  require(rep, p.r1 >= 2.0, "r1 ≥ 2 required");
  require(rep, p.r2 >= 2.0, "r2 ≥ 2 required");
  require(rep, p.r >= 0.0, "r must be ≥ 0");
  require(rep, p.epsilon >= 0.0, "epsilon must be ≥ 0");
  require(rep, p.dim_n >= 1, "dim_n must be ≥ 1");
  require(rep, p.c_sobolev > 0.0, "c_sobolev must be > 0");
  for (double x : {p.chi1, p.chi2, p.mu1, p.mu2, p.r1, p.r2, p.r, p.epsilon, p.c_sobolev}) {
    if (!finite(x)) {
      rep.violations.push_back("model coefficients must be finite");
      break;
    }
  }

  const bool dims_ok = domain.dims >= 1 && domain.dims <= 3;
  require(rep, dims_ok, "dims must be 1, 2, or 3");
  if (dims_ok) {
    for (int d = 0; d < domain.dims; ++d) {
      const std::string axis = "[" + std::to_string(d) + "]";
      require(rep, finite(domain.lengths[d]) && domain.lengths[d] > 0.0, "lengths" + axis + " must be > 0");
      require(rep, domain.cells[d] >= 4, "cells" + axis + " must be ≥ 4");
    }
    if (domain.total_cells() > domain.max_cells) {
      rep.violations.push_back("total cell count " + std::to_string(domain.total_cells()) +
                               " exceeds max_cells " + std::to_string(domain.max_cells));
    }
  }

  require(rep, finite(run.t_end) && run.t_end >= 0.0, "t_end must be ≥ 0");
  require(rep, finite(run.dt_max) && run.dt_max > 0.0, "dt_max must be > 0");
  require(rep, run.cfl_advection > 0.0 && run.cfl_advection <= 1.0, "cfl_advection must lie in (0, 1]");
  require(rep, run.cfl_reaction > 0.0 && run.cfl_reaction <= 1.0, "cfl_reaction must lie in (0, 1]");
  require(rep, finite(run.output_every) && run.output_every > 0.0, "output_every must be > 0");
  require(rep, finite(run.snapshot_every) && run.snapshot_every >= 0.0, "snapshot_every must be ≥ 0");
  require(rep, run.blowup_linf > 1.0, "blowup_linf must be > 1");
  require(rep, run.linear_tol > 0.0 && run.linear_tol <= 1e-4, "linear_tol must lie in (0, 1e-4]");
  require(rep, run.classify_ratio >= 1.0, "classify_ratio must be ≥ 1");
  return rep;
}

ValidationReport validate(const ConfigBundle& b) {
  ValidationReport rep = validate(b.model, b.domain, b.run);
  const auto& ini = b.initial;
  const int dims = (b.domain.dims >= 1 && b.domain.dims <= 3) ? b.domain.dims : 0;
  if (ini.kind == InitialKind::FromSnapshot) {
    require(rep, !ini.snapshot.empty(), "initial.snapshot path required for from-snapshot");
    return rep;
  }
  validate_component(rep, ini.u, "u", ini.kind, dims);
  validate_component(rep, ini.v, "v", ini.kind, dims);
  validate_component(rep, ini.w, "w", ini.kind, dims);
  require(rep, ini.mode >= 0, "mode must be ≥ 0");
  require(rep, ini.bumps >= 1, "bumps must be ≥ 1");
  const bool u_nonzero =
      ini.u.base > 0.0 || (ini.kind == InitialKind::GaussianBumps && ini.u.amplitude > 0.0);
  require(rep, u_nonzero, "u0 must not vanish identically");
  return rep;
}

namespace {

[[noreturn]] void key_error(const std::string& section, const std::string& key, const toml::Value& v,
                            const std::string& what) {
  throw ConfigError("line " + std::to_string(v.line) + ": [" + section + "] " + key + ": " + what);
}

double get_double(const std::string& sec, const std::string& key, const toml::Value& v) {
  if (!v.is_numeric()) key_error(sec, key, v, "expected a number");
  return v.as_double();
}

std::int64_t get_int(const std::string& sec, const std::string& key, const toml::Value& v) {
  if (v.kind == toml::Value::Kind::Integer) return v.integer;
  if (v.kind == toml::Value::Kind::Float && std::floor(v.number) == v.number && std::isfinite(v.number)) {
    return static_cast<std::int64_t>(v.number);
  }
  key_error(sec, key, v, "expected an integer");
}

std::string get_string(const std::string& sec, const std::string& key, const toml::Value& v) {
  if (v.kind != toml::Value::Kind::String) key_error(sec, key, v, "expected a string");
  return v.text;
}

template <typename T, typename Get>
std::array<T, 3> get_axes(const std::string& sec, const std::string& key, const toml::Value& v,
                          std::array<T, 3> current, Get get) {
  if (v.kind != toml::Value::Kind::Array) {
    const T x = static_cast<T>(get(sec, key, v));
    return {x, x, x};
  }
  if (v.items.empty() || v.items.size() > 3) key_error(sec, key, v, "expected 1 to 3 entries");
  for (std::size_t i = 0; i < v.items.size(); ++i) current[i] = static_cast<T>(get(sec, key, v.items[i]));
  return current;
}

void check_keys(const std::string& name, const toml::Section& sec, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : sec) {
    if (!allowed.count(key)) {
      throw ConfigError("line " + std::to_string(value.line) + ": unknown key '" + key + "' in [" + name + "]");
    }
  }
}

const std::set<std::string> kModelKeys{"chi1", "chi2", "mu1", "mu2", "r1", "r2", "r", "epsilon", "dim_n", "c_sobolev"};
const std::set<std::string> kDomainKeys{"dims", "lengths", "cells", "max_cells"};
const std::set<std::string> kRunKeys{"t_end",       "dt_max",       "cfl_advection", "cfl_reaction",
                                     "output_every", "snapshot_every", "blowup_linf", "linear_tol",
                                     "seed",        "scheme",       "classify_ratio"};

std::set<std::string> initial_keys() {
  std::set<std::string> keys{"kind", "mode", "bumps", "snapshot"};
  for (const char* c : {"u", "v", "w"}) {
    for (const char* f : {"_base", "_amplitude", "_width", "_center"}) keys.insert(std::string(c) + f);
  }
  return keys;
}

}  // namespace

ConfigBundle from_document(const toml::Document& doc) {
  static const std::set<std::string> sections{"model", "domain", "run", "initial"};
  for (const auto& [name, sec] : doc) {
    if (!sections.count(name)) throw ConfigError("unknown section [" + name + "]");
  }
  ConfigBundle b;

  const auto model_it = doc.find("model");
  if (model_it == doc.end()) throw ConfigError("missing required section [model]");
  {
    const auto& sec = model_it->second;
    check_keys("model", sec, kModelKeys);
    for (const char* req : {"chi1", "chi2", "mu1", "mu2"}) {
      if (!sec.count(req)) throw ConfigError(std::string("[model] missing required key '") + req + "'");
    }
    auto& m = b.model;
    for (const auto& [key, v] : sec) {
      if (key == "dim_n") {
        m.dim_n = static_cast<int>(get_int("model", key, v));
        continue;
      }
      const double x = get_double("model", key, v);
      if (key == "chi1") m.chi1 = x;
      else if (key == "chi2") m.chi2 = x;
      else if (key == "mu1") m.mu1 = x;
      else if (key == "mu2") m.mu2 = x;
      else if (key == "r1") m.r1 = x;
      else if (key == "r2") m.r2 = x;
      else if (key == "r") m.r = x;
      else if (key == "epsilon") m.epsilon = x;
      else if (key == "c_sobolev") m.c_sobolev = x;
    }
  }

  if (auto it = doc.find("domain"); it != doc.end()) {
    const auto& sec = it->second;
    check_keys("domain", sec, kDomainKeys);
    auto& d = b.domain;
    if (auto k = sec.find("dims"); k != sec.end()) d.dims = static_cast<int>(get_int("domain", "dims", k->second));
    if (auto k = sec.find("lengths"); k != sec.end()) {
      if (k->second.kind == toml::Value::Kind::Array && static_cast<int>(k->second.items.size()) != d.dims) {
        key_error("domain", "lengths", k->second, "expected " + std::to_string(d.dims) + " entries");
      }
      d.lengths = get_axes<double>("domain", "lengths", k->second, d.lengths, get_double);
    }
    if (auto k = sec.find("cells"); k != sec.end()) {
      if (k->second.kind == toml::Value::Kind::Array && static_cast<int>(k->second.items.size()) != d.dims) {
        key_error("domain", "cells", k->second, "expected " + std::to_string(d.dims) + " entries");
      }
      d.cells = get_axes<int>("domain", "cells", k->second, d.cells, get_int);
    }
    if (auto k = sec.find("max_cells"); k != sec.end()) d.max_cells = get_int("domain", "max_cells", k->second);
  }

  if (auto it = doc.find("run"); it != doc.end()) {
    const auto& sec = it->second;
    check_keys("run", sec, kRunKeys);
    auto& r = b.run;
    for (const auto& [key, v] : sec) {
      if (key == "seed") {
        const auto s = get_int("run", key, v);
        if (s < 0) key_error("run", key, v, "seed must be ≥ 0");
        r.seed = static_cast<std::uint64_t>(s);
      } else if (key == "scheme") {
        try {
          r.scheme = flux_scheme_from_string(get_string("run", key, v));
        } catch (const ConfigError& e) {
          key_error("run", key, v, e.what());
        }
      } else {
        const double x = get_double("run", key, v);
        if (key == "t_end") r.t_end = x;
        else if (key == "dt_max") r.dt_max = x;
        else if (key == "cfl_advection") r.cfl_advection = x;
        else if (key == "cfl_reaction") r.cfl_reaction = x;
        else if (key == "output_every") r.output_every = x;
        else if (key == "snapshot_every") r.snapshot_every = x;
        else if (key == "blowup_linf") r.blowup_linf = x;
        else if (key == "linear_tol") r.linear_tol = x;
        else if (key == "classify_ratio") r.classify_ratio = x;
      }
    }
  }

  if (auto it = doc.find("initial"); it != doc.end()) {
    const auto& sec = it->second;
    static const std::set<std::string> keys = initial_keys();
    check_keys("initial", sec, keys);
    auto& ini = b.initial;
    for (const auto& [key, v] : sec) {
      if (key == "kind") {
        try {
          ini.kind = initial_kind_from_string(get_string("initial", key, v));
        } catch (const ConfigError& e) {
          key_error("initial", key, v, e.what());
        }
        continue;
      }
      if (key == "mode") {
        ini.mode = static_cast<int>(get_int("initial", key, v));
        continue;
      }
      if (key == "bumps") {
        ini.bumps = static_cast<int>(get_int("initial", key, v));
        continue;
      }
      if (key == "snapshot") {
        ini.snapshot = get_string("initial", key, v);
        continue;
      }
      ComponentInit& c = key[0] == 'u' ? ini.u : (key[0] == 'v' ? ini.v : ini.w);
      const std::string field = key.substr(2);
      if (field == "center") c.center = get_axes<double>("initial", key, v, c.center, get_double);
      else if (field == "base") c.base = get_double("initial", key, v);
      else if (field == "amplitude") c.amplitude = get_double("initial", key, v);
      else if (field == "width") c.width = get_double("initial", key, v);
    }
  }

  // Axes beyond `dims` carry no information; pin them so configs compare by content.
  const DomainSpec defaults;
  const ComponentInit comp_defaults;
  for (int d = std::max(b.domain.dims, 0); d < 3; ++d) {
    b.domain.lengths[d] = defaults.lengths[d];
    b.domain.cells[d] = defaults.cells[d];
    b.initial.u.center[d] = comp_defaults.center[d];
    b.initial.v.center[d] = comp_defaults.center[d];
    b.initial.w.center[d] = comp_defaults.center[d];
  }
  return b;
}

void apply_override(toml::Document& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  const std::string lhs = assignment.substr(0, eq);
  const auto dot = lhs.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size()) {
    throw ConfigError("override key '" + lhs + "' must be section.key");
  }
  toml::Value v;
  try {
    v = toml::parse_value(assignment.substr(eq + 1));
  } catch (const toml::ParseError& e) {
    throw ConfigError("override '" + assignment + "': " + e.what());
  }
  doc[lhs.substr(0, dot)][lhs.substr(dot + 1)] = v;
}

ConfigBundle parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  toml::Document doc;
  try {
    doc = toml::parse(text);
  } catch (const toml::ParseError& e) {
    throw ConfigError(std::string("parse error at ") + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  ConfigBundle b = from_document(doc);
  const ValidationReport rep = validate(b);
  if (!rep.ok()) throw ConfigError("invalid configuration:\n" + rep.to_string(), rep.violations);
  return b;
}

ConfigBundle load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.details());
  }
}

namespace {

std::string axes_text(const double* v, int n) {
  std::string s = "[";
  for (int i = 0; i < n; ++i) s += (i ? ", " : "") + toml::format_double(v[i]);
  return s + "]";
}

std::string axes_text(const int* v, int n) {
  std::string s = "[";
  for (int i = 0; i < n; ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

}  // namespace

std::string write_config(const ConfigBundle& b) {
  using toml::format_double;
  std::ostringstream o;
  const auto& m = b.model;
  o << "[model]\n"
    << "chi1 = " << format_double(m.chi1) << "\n"
    << "chi2 = " << format_double(m.chi2) << "\n"
    << "mu1 = " << format_double(m.mu1) << "\n"
    << "mu2 = " << format_double(m.mu2) << "\n"
    << "r1 = " << format_double(m.r1) << "\n"
    << "r2 = " << format_double(m.r2) << "\n"
    << "r = " << format_double(m.r) << "\n"
    << "epsilon = " << format_double(m.epsilon) << "\n"
    << "dim_n = " << m.dim_n << "\n"
    << "c_sobolev = " << format_double(m.c_sobolev) << "\n\n";

  const auto& d = b.domain;
  const int nd = std::clamp(d.dims, 1, 3);
  o << "[domain]\n"
    << "dims = " << d.dims << "\n"
    << "lengths = " << axes_text(d.lengths.data(), nd) << "\n"
    << "cells = " << axes_text(d.cells.data(), nd) << "\n"
    << "max_cells = " << d.max_cells << "\n\n";

  const auto& r = b.run;
  o << "[run]\n"
    << "t_end = " << format_double(r.t_end) << "\n"
    << "dt_max = " << format_double(r.dt_max) << "\n"
    << "cfl_advection = " << format_double(r.cfl_advection) << "\n"
    << "cfl_reaction = " << format_double(r.cfl_reaction) << "\n"
    << "output_every = " << format_double(r.output_every) << "\n"
    << "snapshot_every = " << format_double(r.snapshot_every) << "\n"
    << "blowup_linf = " << format_double(r.blowup_linf) << "\n"
    << "linear_tol = " << format_double(r.linear_tol) << "\n"
    << "seed = " << r.seed << "\n"
    << "scheme = \"" << to_string(r.scheme) << "\"\n"
    << "classify_ratio = " << format_double(r.classify_ratio) << "\n\n";

  const auto& i = b.initial;
  o << "[initial]\n"
    << "kind = \"" << to_string(i.kind) << "\"\n"
    << "mode = " << i.mode << "\n"
    << "bumps = " << i.bumps << "\n"
    << "snapshot = " << toml::format_value(toml::Value::of_string(i.snapshot)) << "\n";
  const std::pair<const char*, const ComponentInit*> comps[] = {{"u", &i.u}, {"v", &i.v}, {"w", &i.w}};
  for (const auto& [name, c] : comps) {
    o << name << "_base = " << format_double(c->base) << "\n"
      << name << "_amplitude = " << format_double(c->amplitude) << "\n"
      << name << "_width = " << format_double(c->width) << "\n"
      << name << "_center = " << axes_text(c->center.data(), nd) << "\n";
  }
  return o.str();
}

std::string config_hash(const ConfigBundle& b) {
  // FNV-1a, 64 bit
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : write_config(b)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

unsigned threads_from_env(unsigned fallback) {
  if (const char* env = std::getenv("AA_LAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return fallback;
}

}  // namespace aalab::config
