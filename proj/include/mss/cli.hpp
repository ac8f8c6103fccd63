#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mss {

// Full command-line surface.  `args` excludes the program name and is in
// natural order.  Returns the process exit code: 0 success, 1 validation
// or usage error, 2 runtime error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace mss
