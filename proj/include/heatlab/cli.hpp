#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace heatlab {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,   ///< reserved for a failed acceptance check
    kExitUsage = 2,
    kExitData = 3,
    kExitInternal = 4,
};

/// Runs one command line (without the program name). Messages go to `out` and `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace heatlab
