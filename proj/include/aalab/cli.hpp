#pragma once

#include <iosfwd>

namespace aalab::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kViolated = 2,
  kInconclusive = 3,
  kIoError = 4,
};

/// Entry point for the `aalab` tool. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace aalab::cli
