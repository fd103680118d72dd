#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace paramsynth::cli {

/// Exit codes.
enum Exit : int {
    ok = 0,
    usage_error = 1, ///< bad flags, unreadable or malformed input, ill-defined valuation
    negative = 2,    ///< exhausted search or specification violated
    not_supported = 3,
};

/// Runs one command. `args` excludes the program name. Results go to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace paramsynth::cli
