#pragma once

#include <iosfwd>

namespace kdisc::cli {

enum ExitCode : int { ok = 0, input_error = 2, numerical_error = 3 };

/// Runs the command line `argv` in-process. Results go to `out` unless
/// --output names a file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kdisc::cli
