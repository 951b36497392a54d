#pragma once

#include <ostream>

namespace mlembed {

/// Command-line entry point. `out` receives the deterministic report, `log`
/// receives timings and diagnostics. Exit codes: 0 on any solver status,
/// 1 when `compare` finds disagreeing optima, 2 on usage or input errors,
/// 3 on internal failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace mlembed
