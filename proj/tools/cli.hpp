#pragma once

#include <iosfwd>

namespace stabeval::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kThresholdUnreachable = 2,
  kNonConvergence = 3,
};

/// Entry point shared by the binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stabeval::cli
