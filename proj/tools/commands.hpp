#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uvcplan::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kInfeasible = 3,
  kIo = 4,
};

/// Runs one CLI invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uvcplan::cli
