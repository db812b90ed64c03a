#pragma once

#include <iosfwd>

namespace gldgcn {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitGradcheck = 5,
};

/// Runs one command (train, eval, gradcheck, ppmi, partition) and returns its
/// exit code. Regular output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gldgcn
