#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace surprise::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses `args` (without the program name) and runs the chosen subcommand:
/// score, sample, eval, rollout, extract. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace surprise::cli
