#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace pdeabcd::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kDivergence = 3,
    kCriterionFailed = 4,
};

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace pdeabcd::cli
