#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace netmoment::cli {

enum ExitCode : int {
  kOk = 0,
  kDataError = 1,       // bad flags, malformed input, degenerate degrees, singular design
  kNotConverged = 2,    // output (with trace) is still written
};

/// Runs `netmoment <subcommand> ...`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netmoment::cli
