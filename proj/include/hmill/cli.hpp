#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hmill::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;

/// Runs one command line (without the program name). Returns the exit code:
/// 0 success, 1 I/O failure, 2 invalid input or usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hmill::cli
