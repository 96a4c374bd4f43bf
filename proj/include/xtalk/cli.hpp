#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace xtalk {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,         // bad flags or unparseable input
  kExitSolver = 2,        // solver missing, timed out, or fit failed
  kExitVerification = 3,  // a schedule failed verification
};

/// Runs the command line `args` (args[0] is the program name). Flags may
/// also come from XTALK_<FLAG> environment variables.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xtalk
