#pragma once

#include <ostream>

namespace dare::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kExitIo = 5;

// Runs the command line; errors are reported as one JSON object on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dare::cli
