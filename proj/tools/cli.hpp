#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace enc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumeric = 2;

/// Runs the command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// `--help` text of the top-level app ("") or of a subcommand.
std::string help_text(const std::string& subcommand);

/// Names of all subcommands, in help order.
std::vector<std::string> subcommands();

/// "0,2,5" and ranges "0-4" (inclusive), mixed freely.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace enc::cli
