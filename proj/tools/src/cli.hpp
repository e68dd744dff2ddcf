#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zplkit::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_io = 1,      ///< unreadable input, parse error, invalid option value
  exit_fit = 2,     ///< the fit could not run or did not converge
  exit_usage = 64,  ///< unknown subcommand or malformed command line
};

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zplkit::cli
