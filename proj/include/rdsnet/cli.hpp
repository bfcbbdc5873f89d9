#pragma once

#include <string>
#include <vector>

namespace rdsnet {

/// Runs the command-line tool. Exit codes: 0 success, 1 validation failure,
/// 2 runtime/usage error. Exposed as a function so tests can drive commands
/// in-process.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace rdsnet
