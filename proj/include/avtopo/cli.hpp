#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace avtopo::cli {

/// Process exit codes.
enum Exit : int {
  exit_ok = 0,
  exit_failed = 1,  ///< selftest or grad-check failure
  exit_config = 2,  ///< invalid parameter, config, dimensions or label colors
  exit_io = 3,      ///< missing or unreadable file
};

/// Runs one command line (program name excluded). The JSON run manifest goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace avtopo::cli
