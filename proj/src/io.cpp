#include "aalab/io.hpp"

#include <cstdio>
#include <system_error>

#ifndef AALAB_VERSION
#define AALAB_VERSION "unknown"
#endif

namespace aalab::io {

std::string version() { return AALAB_VERSION; }

std::vector<std::string> reproducibility_stanza(const config::ConfigBundle& bundle) {
  return {"aalab version " + version(), "config_hash " + config::config_hash(bundle),
          "seed " + std::to_string(bundle.run.seed)};
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "': " + (ec ? ec.message() : "not a directory"));
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

PlotEmitResult emit_plot_data(const monitors::DiagnosticSeries& series, const std::filesystem::path& dir,
                              const std::vector<std::string>& columns, const std::vector<std::string>& stanza) {
  PlotEmitResult res;
  if (series.empty()) throw std::invalid_argument("emit_plot_data: series is empty");
  if (columns.empty()) {
    res.warning = "no plot columns requested; nothing written";
    return res;
  }
  for (const auto& c : columns) (void)series.samples().front().column(c);

  ensure_directory(dir);
  char buf[64];
  for (const auto& c : columns) {
    const auto path = dir / (c + ".dat");
    auto out = open_output(path);
    for (const auto& line : stanza) out << "# " << line << '\n';
    out << "# t " << c << '\n';
    for (const auto& s : series.samples()) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", s.t, s.column(c));
      out << buf;
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
    res.files.push_back(path);
  }

  res.driver = dir / "plot.gp";
  auto gp = open_output(res.driver);
  for (const auto& line : stanza) gp << "# " << line << '\n';
  gp << "set terminal pngcairo size 800,500\n"
     << "set xlabel 't'\n"
     << "set key off\n";
  for (const auto& c : columns) {
    gp << "set output '" << c << ".png'\n"
       << "set ylabel '" << c << "'\n"
       << "plot '" << c << ".dat' using 1:2 with lines\n";
  }
  if (!gp) throw IoError("write failed for '" + res.driver.string() + "'");
  return res;
}

}  // namespace aalab::io
