#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crowdact {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInputError = 1, kExitConfigError = 2 };

/// Runs the tool with `args` (excluding the program name). Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowdact
