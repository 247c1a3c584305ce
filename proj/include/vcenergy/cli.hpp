#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vcenergy::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kConfig = 3,
    kInput = 4,
    kCellsFailed = 5,
    kAnalysis = 6,
    kPlatform = 7,
};

/// Runs one command line (args[0] is the program name). Data goes to files,
/// written paths to `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace vcenergy::cli
