#include "aalab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "aalab/analytics.hpp"
#include "aalab/simulation.hpp"

namespace aalab::sweep {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number '" + s + "' in " + what);
  }
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, count)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names{"chi1", "chi2", "mu1", "mu2", "r", "r1", "r2", "epsilon"};
  return names;
}

namespace {

double* parameter_slot(config::ModelParams& p, const std::string& name) {
  if (name == "chi1") return &p.chi1;
  if (name == "chi2") return &p.chi2;
  if (name == "mu1") return &p.mu1;
  if (name == "mu2") return &p.mu2;
  if (name == "r") return &p.r;
  if (name == "r1") return &p.r1;
  if (name == "r2") return &p.r2;
  if (name == "epsilon") return &p.epsilon;
  throw std::invalid_argument("parameter '" + name + "' cannot be swept (allowed: chi1, chi2, mu1, mu2, r, r1, r2, epsilon)");
}

}  // namespace

void set_parameter(config::ModelParams& p, const std::string& name, double value) { *parameter_slot(p, name) = value; }

double get_parameter(const config::ModelParams& p, const std::string& name) {
  auto copy = p;
  return *parameter_slot(copy, name);
}

SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("axis '" + text + "' must look like name=v1,v2,...");
  SweepAxis axis;
  axis.name = trim(text.substr(0, eq));
  for (const auto& item : split(text.substr(eq + 1), ',')) {
    const auto t = trim(item);
    if (t.empty()) throw std::invalid_argument("axis '" + axis.name + "' has an empty value");
    axis.values.push_back(parse_double(t, "axis '" + axis.name + "'"));
  }
  return axis;
}

std::size_t SweepSpec::point_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

void check_spec(const SweepSpec& spec) {
  if (spec.axes.size() > 3) throw std::invalid_argument("a sweep has at most 3 axes");
  std::set<std::string> seen;
  for (const auto& a : spec.axes) {
    config::ModelParams probe;
    set_parameter(probe, a.name, 0.0);
    if (!seen.insert(a.name).second) throw std::invalid_argument("axis '" + a.name + "' appears twice");
    if (a.values.empty()) throw std::invalid_argument("axis '" + a.name + "' has no values");
  }
  std::size_t total = spec.replicate_count();
  for (const auto& a : spec.axes) {
    if (total > spec.cap / a.values.size() + 1) {
      total = spec.cap + 1;
      break;
    }
    total *= a.values.size();
  }
  if (total > spec.cap) {
    throw std::invalid_argument("sweep has more than " + std::to_string(spec.cap) + " runs (points x replicates)");
  }
}

std::vector<double> point_values(const SweepSpec& spec, std::size_t id) {
  std::vector<double> v(spec.axes.size());
  for (std::size_t a = spec.axes.size(); a-- > 0;) {
    const std::size_t n = spec.axes[a].values.size();
    v[a] = spec.axes[a].values[id % n];
    id /= n;
  }
  return v;
}

SweepRow run_point(const SweepSpec& spec, std::size_t point_id, std::size_t replicate) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRow row;
  row.point_id = point_id;
  row.replicate = replicate;
  row.values = point_values(spec, point_id);

  config::ConfigBundle b = spec.base;
  for (std::size_t a = 0; a < spec.axes.size(); ++a) set_parameter(b.model, spec.axes[a].name, row.values[a]);
  if (!spec.seeds.empty()) b.run.seed = spec.seeds[replicate];

  try {
    row.mu_star = analytics::mu_star(analytics::threshold_inputs(b.model)).value;
    row.margin = std::min(b.model.mu1, b.model.mu2) - row.mu_star;
  } catch (const std::invalid_argument&) {
    row.mu_star = std::numeric_limits<double>::quiet_NaN();
    row.margin = std::numeric_limits<double>::quiet_NaN();
  }

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const auto report = config::validate(b);
    if (!report.ok()) throw config::ConfigError("invalid point", report.violations);
    const auto res = simulation::run(b);
    row.classification = monitors::to_string(res.classification);
    const auto& s = res.final_state;
    row.final_linf_u = fields::lp_norm(s.u, fields::kInfinity);
    row.final_linf_v = fields::lp_norm(s.v, fields::kInfinity);
    row.final_l1_sum = fields::lp_norm(s.u, 1.0) + fields::lp_norm(s.v, 1.0);
    row.steps = res.steps;
    if (res.status == stepper::StepStatus::DtUnderflow) {
      row.classification = "Failed";
      row.error = "dt_underflow at t=" + fmt(s.t);
    }
  } catch (const config::ConfigError& e) {
    row.classification = "Failed";
    row.error = e.what();
    for (const auto& d : e.details()) row.error += "; " + d;
    row.final_linf_u = row.final_linf_v = row.final_l1_sum = nan;
  } catch (const std::exception& e) {
    row.classification = "Failed";
    row.error = e.what();
    row.final_linf_u = row.final_linf_v = row.final_l1_sum = nan;
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

namespace {

void write_header(std::ostream& out, const std::vector<std::string>& axis_names) {
  out << "point_id,replicate";
  for (const auto& n : axis_names) out << ',' << n;
  out << ",mu_star,margin,classification,final_linf_u,final_linf_v,final_l1_sum,steps,wall_seconds\n";
}

void write_row(std::ostream& out, const SweepRow& r) {
  out << r.point_id << ',' << r.replicate;
  for (double v : r.values) out << ',' << fmt(v);
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.6f", r.wall_seconds);
  out << ',' << fmt(r.mu_star) << ',' << fmt(r.margin) << ',' << r.classification << ',' << fmt(r.final_linf_u)
      << ',' << fmt(r.final_linf_v) << ',' << fmt(r.final_l1_sum) << ',' << r.steps << ',' << wall << '\n';
}

std::vector<std::string> axis_names_of(const SweepSpec& spec) {
  std::vector<std::string> n;
  for (const auto& a : spec.axes) n.push_back(a.name);
  return n;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  write_header(out, result.axis_names);
  for (const auto& r : result.rows) write_row(out, r);
}

SweepResult read_sweep_csv(std::istream& in) {
  SweepResult res;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (header.empty()) {
      header = cells;
      if (header.size() < 10 || header[0] != "point_id" || header[1] != "replicate") {
        throw std::runtime_error("sweep CSV has an unexpected header");
      }
      res.axis_names.assign(header.begin() + 2, header.end() - 8);
      continue;
    }
    if (cells.size() != header.size()) throw std::runtime_error("sweep CSV row has the wrong number of fields");
    SweepRow r;
    r.point_id = static_cast<std::size_t>(std::stoull(cells[0]));
    r.replicate = static_cast<std::size_t>(std::stoull(cells[1]));
    const std::size_t na = res.axis_names.size();
    for (std::size_t a = 0; a < na; ++a) r.values.push_back(parse_double(cells[2 + a], "sweep CSV"));
    std::size_t c = 2 + na;
    r.mu_star = parse_double(cells[c++], "sweep CSV");
    r.margin = parse_double(cells[c++], "sweep CSV");
    r.classification = cells[c++];
    r.final_linf_u = parse_double(cells[c++], "sweep CSV");
    r.final_linf_v = parse_double(cells[c++], "sweep CSV");
    r.final_l1_sum = parse_double(cells[c++], "sweep CSV");
    r.steps = std::stol(cells[c++]);
    r.wall_seconds = parse_double(cells[c++], "sweep CSV");
    res.rows.push_back(std::move(r));
  }
  return res;
}

void write_sweep_errors(std::ostream& out, const SweepResult& result) {
  for (const auto& r : result.rows) {
    if (r.classification != "Failed") continue;
    out << r.point_id << ',' << r.replicate << ": " << (r.error.empty() ? "(message not recorded)" : r.error) << '\n';
  }
}

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  check_spec(spec);
  {
    const auto base_report = config::validate(spec.base);
    if (!base_report.ok()) throw config::ConfigError("invalid sweep base configuration", base_report.violations);
  }
  SweepResult result;
  result.axis_names = axis_names_of(spec);
  const std::size_t points = spec.point_count();
  const std::size_t reps = spec.replicate_count();

  std::set<std::size_t> done_points;
  std::vector<SweepRow> resumed;
  if (options.resume && !options.marker_file.empty() && std::filesystem::exists(options.marker_file)) {
    std::ifstream mk(options.marker_file);
    std::string line;
    while (std::getline(mk, line)) {
      line = trim(line);
      if (!line.empty()) done_points.insert(static_cast<std::size_t>(std::stoull(line)));
    }
    if (!options.partial_file.empty() && std::filesystem::exists(options.partial_file)) {
      std::ifstream pf(options.partial_file);
      auto prev = read_sweep_csv(pf);
      if (prev.axis_names != result.axis_names) throw std::runtime_error("partial sweep file has different axes");
      for (auto& r : prev.rows) {
        if (done_points.count(r.point_id)) resumed.push_back(std::move(r));
      }
    }
    // A point only counts as done if all of its rows were recovered.
    std::map<std::size_t, std::size_t> have;
    for (const auto& r : resumed) ++have[r.point_id];
    for (auto it = done_points.begin(); it != done_points.end();) {
      it = (have[*it] == reps) ? std::next(it) : done_points.erase(it);
    }
    std::erase_if(resumed, [&](const SweepRow& r) { return !done_points.count(r.point_id); });
  }

  std::ofstream partial;
  std::ofstream marker;
  if (!options.partial_file.empty()) {
    // Rewritten from the recovered rows so unfinished points never leave duplicates.
    partial.open(options.partial_file, std::ios::trunc);
    if (!partial) throw std::runtime_error("cannot open '" + options.partial_file.string() + "'");
    write_header(partial, result.axis_names);
    for (const auto& r : resumed) write_row(partial, r);
    partial.flush();
  }
  if (!options.marker_file.empty()) {
    marker.open(options.marker_file, std::ios::trunc);
    if (!marker) throw std::runtime_error("cannot open '" + options.marker_file.string() + "'");
    for (std::size_t id : done_points) marker << id << '\n';
    marker.flush();
  }

  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t p = 0; p < points; ++p) {
    if (done_points.count(p)) continue;
    for (std::size_t r = 0; r < reps; ++r) work.emplace_back(p, r);
  }
  std::vector<SweepRow> rows(work.size());
  std::map<std::size_t, std::size_t> remaining;
  for (const auto& [p, r] : work) ++remaining[p];
  std::mutex mu;

  parallel_for(work.size(), options.threads, [&](std::size_t i) {
    rows[i] = run_point(spec, work[i].first, work[i].second);
    std::lock_guard lock(mu);
    if (partial.is_open()) {
      write_row(partial, rows[i]);
      partial.flush();
    }
    if (--remaining[work[i].first] == 0 && marker.is_open()) {
      marker << work[i].first << '\n';
      marker.flush();
    }
  });

  result.rows = std::move(resumed);
  for (auto& r : rows) result.rows.push_back(std::move(r));
  std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::pair(a.point_id, a.replicate) < std::pair(b.point_id, b.replicate);
  });
  return result;
}

std::vector<MarginPartition> threshold_margin_table(const SweepResult& result) {
  const char* order[] = {"positive", "zero", "negative", "undefined"};
  std::map<std::string, MarginPartition> parts;
  for (const auto& r : result.rows) {
    std::string sign;
    if (std::isnan(r.margin)) {
      sign = "undefined";
    } else if (r.margin > 0.0) {
      sign = "positive";
    } else if (r.margin < 0.0) {
      sign = "negative";
    } else {
      sign = "zero";
    }
    auto& part = parts[sign];
    part.sign = sign;
    ++part.total;
    ++part.counts[r.classification];
  }
  std::vector<MarginPartition> out;
  for (const char* s : order) {
    auto it = parts.find(s);
    if (it != parts.end()) out.push_back(it->second);
  }
  return out;
}

SpaceTimeDistance space_time_l2_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw std::invalid_argument("trajectories have different sample counts");
  if (a.size() < 2) throw std::invalid_argument("trajectories need at least two samples");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].t != b[k].t) throw std::invalid_argument("trajectories do not share sampling times");
    if (!(a[k].grid() == b[k].grid())) throw std::invalid_argument("trajectories do not share a grid");
  }
  std::vector<std::array<double, 3>> sq(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::array<double, 3> s{};
    a[k].grid().for_each_cell([&](int, int, int, std::size_t o) {
      const double du = a[k].u[o] - b[k].u[o];
      const double dv = a[k].v[o] - b[k].v[o];
      const double dw = a[k].w[o] - b[k].w[o];
      s[0] += du * du;
      s[1] += dv * dv;
      s[2] += dw * dw;
    });
    for (auto& x : s) x *= a[k].grid().cell_volume();
    sq[k] = s;
  }
  std::array<double, 3> total{};
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    const double dt = a[k + 1].t - a[k].t;
    for (int c = 0; c < 3; ++c) total[c] += 0.5 * dt * (sq[k][c] + sq[k + 1][c]);
  }
  return {std::sqrt(total[0]), std::sqrt(total[1]), std::sqrt(total[2])};
}

namespace {

void check_epsilon_spec(const EpsilonStudySpec& spec) {
  if (spec.ladder.size() < 3) throw std::invalid_argument("epsilon ladder needs at least 3 rungs");
  for (std::size_t j = 0; j < spec.ladder.size(); ++j) {
    if (!(spec.ladder[j] > 0.0)) throw std::invalid_argument("epsilon ladder entries must be > 0");
    if (j > 0 && !(spec.ladder[j] < spec.ladder[j - 1])) {
      throw std::invalid_argument("epsilon ladder must be strictly decreasing");
    }
  }
  if (spec.base.model.r1 != 2.0 || spec.base.model.r2 != 2.0) {
    throw std::invalid_argument("epsilon study requires r1 = r2 = 2");
  }
  // chi = 0 is admitted here: it is the control case in which epsilon has no effect.
  config::ConfigBundle checked = spec.base;
  if (checked.model.chi1 == 0.0) checked.model.chi1 = 1.0;
  if (checked.model.chi2 == 0.0) checked.model.chi2 = 1.0;
  const auto report = config::validate(checked);
  if (!report.ok()) throw config::ConfigError("invalid epsilon-study base configuration", report.violations);
}

}  // namespace

EpsilonLadderRuns run_epsilon_ladder(const EpsilonStudySpec& spec) {
  check_epsilon_spec(spec);
  const std::size_t n = spec.ladder.size();
  EpsilonLadderRuns runs;
  runs.trajectories.resize(n);
  std::vector<char> ok(n, 0);
  parallel_for(n, spec.threads, [&](std::size_t j) {
    config::ConfigBundle b = spec.base;
    b.model.epsilon = spec.ladder[j];
    simulation::RunOptions opt;
    opt.fixed_dt = true;
    auto& traj = runs.trajectories[j];
    opt.on_output = [&traj](const fields::FieldState& s) { traj.push_back(s); };
    const auto res = simulation::run(b, opt);
    ok[j] = res.status == stepper::StepStatus::Advanced;
  });
  runs.completed.assign(ok.begin(), ok.end());
  return runs;
}

EpsilonStudyResult epsilon_study(const EpsilonStudySpec& spec) {
  const auto runs = run_epsilon_ladder(spec);
  EpsilonStudyResult res;
  const std::size_t n = spec.ladder.size();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    EpsilonRung rung;
    rung.eps = spec.ladder[j];
    rung.eps_next = spec.ladder[j + 1];
    if (!runs.completed[j] || !runs.completed[j + 1]) {
      rung.inconclusive = true;
      rung.note = "run blew up or underflowed";
      rung.d_u = rung.d_v = rung.d_w = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto d = space_time_l2_distance(runs.trajectories[j], runs.trajectories[j + 1]);
      rung.d_u = d.u;
      rung.d_v = d.v;
      rung.d_w = d.w;
    }
    res.inconclusive = res.inconclusive || rung.inconclusive;
    res.rungs.push_back(rung);
  }
  auto decreasing = [&](double EpsilonRung::*m) {
    if (res.inconclusive) return false;
    for (std::size_t j = 1; j < res.rungs.size(); ++j) {
      if (!(res.rungs[j].*m < res.rungs[j - 1].*m)) return false;
    }
    return true;
  };
  res.decreasing_u = decreasing(&EpsilonRung::d_u);
  res.decreasing_v = decreasing(&EpsilonRung::d_v);
  res.decreasing_w = decreasing(&EpsilonRung::d_w);
  return res;
}

void write_epsilon_csv(std::ostream& out, const EpsilonStudyResult& result, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "eps,eps_next,d_u,d_v,d_w,status\n";
  for (const auto& r : result.rungs) {
    out << fmt(r.eps) << ',' << fmt(r.eps_next) << ',' << fmt(r.d_u) << ',' << fmt(r.d_v) << ',' << fmt(r.d_w) << ','
        << (r.inconclusive ? "inconclusive" : "ok") << '\n';
  }
  out << "# decreasing_u=" << (result.decreasing_u ? "yes" : "no") << " decreasing_v="
      << (result.decreasing_v ? "yes" : "no") << " decreasing_w=" << (result.decreasing_w ? "yes" : "no") << '\n';
}

}  // namespace aalab::sweep
