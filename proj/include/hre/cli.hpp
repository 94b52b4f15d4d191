#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hre {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitNotConverged = 3;

// Runs the tool on args (args[0] is the program name). Result files go where
// --out points; the human-readable table goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hre
