#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgecache::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitIo = 4;

/// Runs the command line `args` (without the program name). Outputs go to
/// `out` unless a directory is given by --out or the config; diagnostics go
/// to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgecache::cli
