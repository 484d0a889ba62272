#pragma once

#include <iosfwd>

namespace ma3d {

/// Exit codes of the command-line driver.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitSolver = 2 };

/// Runs the ma3d command line (subcommands solve-poisson, solve-mae, bench,
/// mesh). Results go to `out` unless --out names a file; messages go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ma3d
