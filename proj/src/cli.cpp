#include "aalab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "aalab/analytics.hpp"
#include "aalab/config.hpp"
#include "aalab/io.hpp"
#include "aalab/monitors.hpp"
#include "aalab/simulation.hpp"
#include "aalab/sweep.hpp"

namespace aalab::cli {

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = "./out";
  std::vector<std::string> overrides;
  int threads = 0;
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw config::ConfigError("bad value '" + item + "' in " + what);
    }
  }
  if (out.empty()) throw config::ConfigError(what + " is empty");
  return out;
}

unsigned thread_count(const Common& c) {
  if (c.threads > 0) return static_cast<unsigned>(c.threads);
  return config::threads_from_env(std::max(1u, std::thread::hardware_concurrency()));
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& stanza,
                 const std::string& body) {
  auto f = io::open_output(path);
  for (const auto& s : stanza) f << "# " << s << '\n';
  f << body;
  if (!f) throw io::IoError("write failed for '" + path.string() + "'");
}

struct Row {
  std::string name;
  std::string value;
};

std::vector<Row> analyze_rows(const config::ConfigBundle& b) {
  const auto& p = b.model;
  std::vector<Row> rows;
  try {
    const auto ms = analytics::mu_star(analytics::threshold_inputs(p));
    rows.push_back({"mu_star", fmt(ms.value)});
    rows.push_back({"mu_star_chemotactic", fmt(ms.chemotactic_part)});
    rows.push_back({"mu_star_proliferation", fmt(ms.proliferation_part)});
    rows.push_back({"min_mu", fmt(std::min(p.mu1, p.mu2))});
    rows.push_back({"margin", fmt(std::min(p.mu1, p.mu2) - ms.value)});
  } catch (const std::invalid_argument& e) {
    rows.push_back({"mu_star", std::string("undefined (") + e.what() + ")"});
  }
  rows.push_back({"young_constant_L", fmt(analytics::young_constant_L(p.mu2, p.r2, p.r))});

  const analytics::HMinQuery hq{2.0, std::max(p.chi1, p.chi2), p.c_sobolev};
  const auto hm = analytics::h_min(hq);
  rows.push_back({"h_min_delta2_y", fmt(hm.y_min)});
  rows.push_back({"h_min_delta2_value", fmt(hm.value)});

  const double n = p.dim_n;
  for (double pp : {2.0, n / 2.0 + 1.0, p.r1 + 1.0}) {
    const std::string key = "gn_alpha_p" + fmt(pp) + "_q1";
    try {
      const auto g = analytics::gn_exponent({pp, 1.0, p.dim_n});
      rows.push_back({key, fmt(g.alpha) + (g.in_unit_interval ? "" : " (" + g.warning + ")")});
    } catch (const std::invalid_argument& e) {
      rows.push_back({key, std::string("undefined (") + e.what() + ")"});
    }
  }

  const auto eq = analytics::homogeneous_equilibria(p);
  for (std::size_t i = 0; i < eq.size(); ++i) {
    const auto res = analytics::reaction_residuals(p, eq[i]);
    rows.push_back({"equilibrium_" + std::to_string(i),
                    fmt(eq[i].u) + " " + fmt(eq[i].v) + " " + fmt(eq[i].w) + " residual " + fmt(res.max_abs())});
  }
  return rows;
}

int cmd_analyze(const Common& c, bool csv, std::ostream& out) {
  const auto b = config::load_config(c.config_path, c.overrides);
  io::ensure_directory(c.out_dir);
  const auto rows = analyze_rows(b);
  std::ostringstream text;
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  for (const auto& r : rows) text << r.name << std::string(w + 2 - r.name.size(), ' ') << r.value << '\n';
  out << text.str();
  const auto stanza = io::reproducibility_stanza(b);
  write_lines(std::filesystem::path(c.out_dir) / "analyze.txt", stanza, text.str());
  if (csv) {
    std::ostringstream body;
    body << "quantity,value\n";
    for (const auto& r : rows) body << r.name << ',' << r.value << '\n';
    write_lines(std::filesystem::path(c.out_dir) / "analyze.csv", stanza, body.str());
  }
  return kOk;
}

std::vector<std::string> plot_columns(const std::string& spec) {
  if (spec == "all") {
    auto cols = monitors::DiagnosticSample::column_names();
    cols.erase(cols.begin());
    return cols;
  }
  std::vector<std::string> cols;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) cols.push_back(item);
  }
  return cols;
}

int cmd_simulate(const Common& c, const std::string& plot, bool plot_given, std::ostream& out, std::ostream& err) {
  const auto b = config::load_config(c.config_path, c.overrides);
  const std::filesystem::path dir(c.out_dir);
  io::ensure_directory(dir);
  simulation::RunOptions opt;
  if (b.run.snapshot_every > 0.0) {
    opt.snapshot_dir = dir / "snapshots";
    io::ensure_directory(opt.snapshot_dir);
  }
  const auto res = simulation::run(b, opt);
  const auto stanza = io::reproducibility_stanza(b);
  {
    auto f = io::open_output(dir / "diagnostics.csv");
    monitors::write_series_csv(f, res.series, stanza);
    if (!f) throw io::IoError("write failed for diagnostics.csv");
  }
  if (plot_given) {
    const auto r = io::emit_plot_data(res.series, dir / "plot", plot_columns(plot), stanza);
    if (!r.warning.empty()) err << "warning: " << r.warning << '\n';
  }
  std::ostringstream line;
  line << "classification " << monitors::to_string(res.classification) << " status " << stepper::to_string(res.status)
       << " t " << fmt(res.final_state.t) << " steps " << res.steps << " rejected " << res.rejected_steps
       << " min_value " << fmt(res.min_value) << '\n';
  out << line.str();
  write_lines(dir / "classification.txt", stanza, line.str());
  return kOk;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& axes, const std::string& seeds, bool resume,
              std::size_t cap, std::ostream& out, std::ostream& err) {
  sweep::SweepSpec spec;
  spec.base = config::load_config(c.config_path, c.overrides);
  spec.cap = cap;
  try {
    for (const auto& a : axes) spec.axes.push_back(sweep::parse_axis(a));
    if (!seeds.empty()) {
      for (double s : parse_list(seeds, "--seeds")) {
        if (s < 0 || s != std::floor(s)) throw config::ConfigError("seeds must be nonnegative integers");
        spec.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
    sweep::check_spec(spec);
  } catch (const std::invalid_argument& e) {
    throw config::ConfigError(e.what());
  }
  const std::filesystem::path dir(c.out_dir);
  io::ensure_directory(dir);
  sweep::SweepOptions opt;
  opt.threads = thread_count(c);
  opt.partial_file = dir / "sweep_partial.csv";
  opt.marker_file = dir / "sweep_done.txt";
  opt.resume = resume;
  const auto result = sweep::run_sweep(spec, opt);

  const auto stanza = io::reproducibility_stanza(spec.base);
  {
    auto f = io::open_output(dir / "sweep.csv");
    sweep::write_sweep_csv(f, result, stanza);
    if (!f) throw io::IoError("write failed for sweep.csv");
  }
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += r.classification == "Failed";
  if (failed) {
    auto f = io::open_output(dir / "sweep_errors.txt");
    sweep::write_sweep_errors(f, result);
    err << failed << " run(s) failed; see sweep_errors.txt\n";
  }

  std::ostringstream table;
  table << "margin = min(mu1, mu2) - mu_star; a positive margin is sufficient for boundedness, a negative one "
           "predicts nothing\n";
  for (const auto& part : sweep::threshold_margin_table(result)) {
    table << part.sign << " margin: " << part.total << " run(s)";
    for (const auto& [cls, n] : part.counts) table << ", " << cls << ' ' << n;
    table << '\n';
  }
  out << result.rows.size() << " row(s) written to " << (dir / "sweep.csv").string() << '\n' << table.str();
  write_lines(dir / "margin_table.txt", stanza, table.str());
  return kOk;
}

int cmd_epsilon(const Common& c, const std::string& ladder, std::ostream& out) {
  sweep::EpsilonStudySpec spec;
  spec.base = config::load_config(c.config_path, c.overrides);
  spec.ladder = parse_list(ladder, "--ladder");
  spec.threads = thread_count(c);
  sweep::EpsilonStudyResult res;
  try {
    res = sweep::epsilon_study(spec);
  } catch (const std::invalid_argument& e) {
    throw config::ConfigError(e.what());
  }
  const std::filesystem::path dir(c.out_dir);
  io::ensure_directory(dir);
  const auto stanza = io::reproducibility_stanza(spec.base);
  {
    auto f = io::open_output(dir / "epsilon_study.csv");
    sweep::write_epsilon_csv(f, res, stanza);
    if (!f) throw io::IoError("write failed for epsilon_study.csv");
  }
  sweep::write_epsilon_csv(out, res);
  return res.inconclusive ? kInconclusive : kOk;
}

int cmd_verify(const Common& c, const std::string& series_path, std::ostream& out) {
  const auto b = config::load_config(c.config_path, c.overrides);
  monitors::DiagnosticSeries series;
  if (!series_path.empty()) {
    std::ifstream in(series_path);
    if (!in) throw io::IoError("cannot open series file '" + series_path + "'");
    try {
      series = monitors::read_series_csv(in);
    } catch (const std::invalid_argument& e) {
      throw io::IoError(series_path + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw io::IoError(series_path + ": " + e.what());
    }
  } else {
    series = simulation::run(b).series;
  }
  const auto rep = monitors::check_mass_inequality(series, b.model);
  std::ostringstream text;
  text << "mass_inequality " << monitors::to_string(rep.verdict) << '\n'
       << "samples " << series.size() << '\n'
       << "y0 " << fmt(rep.y0) << '\n'
       << "sup_y " << fmt(rep.sup_y) << '\n'
       << "fitted_c " << fmt(rep.fitted_c) << '\n'
       << "fitted_c_first_half " << fmt(rep.fitted_c_first_half) << '\n'
       << "fitted_c_second_half " << fmt(rep.fitted_c_second_half) << '\n'
       << "absorbing_bound " << fmt(rep.absorbing_bound) << '\n'
       << "eventually_nonincreasing " << (rep.eventually_nonincreasing ? "yes" : "no") << '\n'
       << "detail " << rep.detail << '\n';
  out << text.str();
  const std::filesystem::path dir(c.out_dir);
  io::ensure_directory(dir);
  write_lines(dir / "verify.txt", io::reproducibility_stanza(b), text.str());
  switch (rep.verdict) {
    case monitors::Verdict::Consistent: return kOk;
    case monitors::Verdict::Violated: return kViolated;
    case monitors::Verdict::Inconclusive: return kInconclusive;
  }
  return kInconclusive;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification lab for a two-species chemotaxis system with indirect signal production"};
  app.set_version_flag("--version", io::version());
  app.require_subcommand(1);

  Common c;
  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config_path, "TOML configuration file")->required();
    sub->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--set", c.overrides, "Override section.key=value (repeatable)");
    sub->add_option("--threads", c.threads, "Worker threads (overrides AA_LAB_THREADS)")->check(CLI::PositiveNumber);
  };

  bool csv = false;
  auto* analyze = app.add_subcommand("analyze", "Print closed-form constants and homogeneous equilibria");
  add_common(analyze);
  analyze->add_flag("--csv", csv, "Also write analyze.csv");

  std::string plot;
  auto* simulate = app.add_subcommand("simulate", "Run one simulation and write diagnostics");
  add_common(simulate);
  auto* plot_opt = simulate->add_option("--plot", plot, "Plot-data columns (comma list or 'all')");

  std::vector<std::string> axes;
  std::string seeds;
  bool resume = false;
  std::size_t cap = 10'000;
  auto* sw = app.add_subcommand("sweep", "Parameter sweep with phase classification");
  add_common(sw);
  sw->add_option("--axis", axes, "Axis name=v1,v2,... (repeatable, at most 3)");
  sw->add_option("--seeds", seeds, "Replicate seeds, comma separated");
  sw->add_flag("--resume", resume, "Skip points already listed in sweep_done.txt");
  sw->add_option("--cap", cap, "Maximum number of runs")->capture_default_str();

  std::string ladder = "0.1,0.05,0.025,0.0125";
  auto* eps = app.add_subcommand("epsilon-study", "Cauchy distances along a decreasing epsilon ladder");
  add_common(eps);
  eps->add_option("--ladder", ladder, "Strictly decreasing epsilon values")->capture_default_str();

  std::string series_path;
  auto* verify = app.add_subcommand("verify", "Check the mass functional against its absorbing bound");
  add_common(verify);
  verify->add_option("--series", series_path, "Diagnostics CSV to check instead of simulating");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int rc = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*analyze) return cmd_analyze(c, csv, out);
    if (*simulate) return cmd_simulate(c, plot, plot_opt->count() > 0, out, err);
    if (*sw) return cmd_sweep(c, axes, seeds, resume, cap, out, err);
    if (*eps) return cmd_epsilon(c, ladder, out);
    if (*verify) return cmd_verify(c, series_path, out);
  } catch (const config::ConfigError& e) {
    std::string head = e.what();
    if (!e.details().empty()) head = head.substr(0, head.find('\n'));
    err << "config error: " << head << '\n';
    for (const auto& d : e.details()) err << "  - " << d << '\n';
    return kConfigError;
  } catch (const io::IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kConfigError;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace aalab::cli
