#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cimsim {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 I/O failure, 2 usage or validation failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;

/// Runs the command line `args` (without the program name). Primary results
/// go to files under --out; short summaries go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace cimsim
