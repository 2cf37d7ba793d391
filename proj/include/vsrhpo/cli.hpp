#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vsrhpo::cli {

/// Stable exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInputError = 2,
  kEmptyResult = 3,
  kEvaluatorError = 4,
};

/// Runs the command line (args excludes the program name). Writes normal
/// output to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vsrhpo::cli
