#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ledsim {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDiverged = 2;

/// Entry point behind the `ledsim` binary. `args` excludes the program name.
/// Subcommands: spectra | synth | run | tune | compare.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ledsim
