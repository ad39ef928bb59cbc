#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ordproto {

// Process exit codes. Stable across releases.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,         // bad flags or config
  kExitIo = 3,            // unreadable/unwritable files, malformed data files
  kExitNumeric = 4,       // training diverged or hit a degenerate batch
  kExitIncompatible = 5,  // checkpoint/store/data dimension mismatch
};

// Runs the command line `args` (args[0] is the program name). Normal output
// goes to `out`, diagnostics and usage text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ordproto
