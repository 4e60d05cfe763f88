#pragma once

// Command-line driver: one subcommand per experiment, JSON config in, CSV/JSON out.
// Exit status 0 on success, 2 on a usage or configuration error (nothing is
// written), 3 on a numerical failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace kamdnlw::cli {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// Runs the driver on argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// CRC-32 of the canonical dump of the effective configuration, as 8 hex digits.
std::string config_hash(const std::string& canonical);

}  // namespace kamdnlw::cli
