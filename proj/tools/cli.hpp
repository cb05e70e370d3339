#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dgms::cli {

/// Runs one CLI invocation. `args` excludes the program name. Exit codes:
/// 0 success, 1 usage error, 2 data error, 3 runtime error.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

} // namespace dgms::cli
