#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dynplan::cli {

enum ExitCode : int {
  kOk = 0,
  kUnsolvable = 2,
  kNotConverged = 3,
  kInputError = 4,
};

/// Full command-line front end; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "30" -> 1..30, "5-9" -> 5..9, "1,4,7" -> {1,4,7}. Throws std::invalid_argument.
std::vector<unsigned long long> parse_seeds(const std::string& text);

}  // namespace dynplan::cli
