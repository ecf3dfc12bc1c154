#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace picardkit {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitSuccess = 0,
    kExitNumericalFailure = 1,
    kExitUsage = 2,
};

/// Entry point of the `picardkit` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace picardkit
