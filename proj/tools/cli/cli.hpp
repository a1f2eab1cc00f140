#pragma once

#include <iosfwd>

namespace tmt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses arguments and runs one command. Errors go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& err);

}  // namespace tmt::cli
