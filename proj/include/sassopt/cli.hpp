#pragma once

#include <ostream>

namespace sassopt {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kParse = 2;
inline constexpr int kNoCandidates = 3;
inline constexpr int kBackend = 4;
inline constexpr int kVerifyFailed = 5;
inline constexpr int kVerifyInconclusive = 6;
}  // namespace exit_code

/// Entry point of the `sassopt` tool. Subcommands: optimize, simulate,
/// verify, diff.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sassopt
