#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edgeperf::cli {

enum ExitCode : int { kOk = 0, kDomainError = 1, kUsageError = 2 };

/// Runs one command line (without the program name). Results go to `out`,
/// diagnostics to `err`.
///
/// Profiles are taken from --profiles, else $EDGEPERF_PROFILES, else the
/// built-in tables.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edgeperf::cli
