#pragma once

#include <iosfwd>

namespace hvc {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitDegenerate = 2;
inline constexpr int kExitNumeric = 3;

// Entry point of the `hvc` tool: preprocess, train, analyze, render, info.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hvc
