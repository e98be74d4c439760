#pragma once

#include <iosfwd>

namespace fog::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kCheckFailed = 3 };

/// Parses argv and dispatches gen | train | eval | gradcheck | params.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fog::cli
