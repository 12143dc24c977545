#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace isrm {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitDivergent = 2,
    kExitInconclusive = 3,
    kExitUnsupported = 4,
    kExitValidationFail = 5,
};

/// Runs `isrm <command> [flags]`; args excludes the program name.
/// Tables go to `out` (unless --out is given), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace isrm
