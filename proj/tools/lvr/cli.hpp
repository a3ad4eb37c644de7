#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace lvr::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kVerificationFailed = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kRuntimeError = 3;

// Runs one command line (without the program name). `in` is only read by
// `tokenize` when --text is absent.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace lvr::cli
