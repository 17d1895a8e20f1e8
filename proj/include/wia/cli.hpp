#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wia {

/// Exit codes: 0 success, 1 usage / parse / schema / evolution error,
/// 2 file I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitIo = 2;

/// Runs the `wia` command line. `args[0]` is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest round-trip form that always shows a decimal point ("0.0", "2.5").
std::string format_fitness(double v);

}  // namespace wia
