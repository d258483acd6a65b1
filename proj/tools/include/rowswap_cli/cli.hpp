#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rowswap::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kValidation = 3,
  kInternal = 4,
};

// Runs one tool invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rowswap::cli
