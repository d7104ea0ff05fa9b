#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nerkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs the command line `args` (args[0] is the program name). Never throws;
/// errors become messages on `err` and a nonzero exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nerkit::cli
