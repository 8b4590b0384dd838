#pragma once

#include <iosfwd>

namespace synthstab {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitValidation = 2,
    kExitTraining = 3,
    kExitIo = 4,
    kExitEvaluation = 5,
};

/// Runs `synthstab <generate|train|stabilize|evaluate> ...` and returns the
/// exit code. Normal output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace synthstab
