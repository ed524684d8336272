#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace leafnet::cli {

/// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_numeric = 3;

/// Runs `leafnet <summary|train|eval|predict> [flags]`; args exclude argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace leafnet::cli
