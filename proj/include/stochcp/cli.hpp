#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stochcp {

inline constexpr std::uint64_t kDefaultSeed = 20240607;

/// Exit statuses of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitNoSolution = 1, kExitInputError = 2 };

/// Runs `stochcp <solve|compile|reduce|analyze> model data [flags]`. `args`
/// excludes the program name. Reports go to `out` (or the --output file),
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stochcp
