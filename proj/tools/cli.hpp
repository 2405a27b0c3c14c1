#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpgcnn::cli {

/// Process exit codes.
enum Exit : int {
    ok = 0,
    parse_error = 2,
    precondition = 3,
    divergence = 4,
    gradcheck_failure = 5,
};

/// Runs the command line `args` (args[0] is the program name). Machine
/// output goes to `out`, logs and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dpgcnn::cli
