#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hypoflow {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

/// Runs one CLI invocation; args excludes the program name. Reports go to
/// `out` (or the --output file), error JSON to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace hypoflow
