#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hydrocla {

/// Exit statuses of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;   ///< usage, parse or validation failure
inline constexpr int kExitSolverError = 2;  ///< non-convergence or a singular system

/// Runs one hydrocla command. `args` excludes the program name. The report
/// goes to `out`, diagnostics and usage text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hydrocla
