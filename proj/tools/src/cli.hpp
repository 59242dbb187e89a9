#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfda::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kModelError = 3,
  kNumericalError = 4,
};

/// Runs one command line (args[0] is the subcommand, not the program name).
/// Summaries go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfda::cli
