#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aalab/config.hpp"
#include "aalab/monitors.hpp"

namespace aalab::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string version();

/// Comment lines (without the leading '#') that open every output file.
std::vector<std::string> reproducibility_stanza(const config::ConfigBundle& bundle);

/// Creates `dir` and its parents; throws IoError on failure.
void ensure_directory(const std::filesystem::path& dir);

/// Opens `path` for writing ('\n' line endings); throws IoError on failure.
std::ofstream open_output(const std::filesystem::path& path);

struct PlotEmitResult {
  std::vector<std::filesystem::path> files;
  std::filesystem::path driver;
  std::string warning;
};

/// Writes `<column>.dat` (t and the column) for each requested column plus a
/// gnuplot driver `plot.gp`. An empty request writes nothing and returns a
/// warning. Throws std::invalid_argument for an empty series or an unknown
/// column.
PlotEmitResult emit_plot_data(const monitors::DiagnosticSeries& series, const std::filesystem::path& dir,
                              const std::vector<std::string>& columns,
                              const std::vector<std::string>& stanza = {});

}  // namespace aalab::io
