#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qacost/error.hpp"

namespace qacost {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitIo = 3;

int exit_code_for(ErrorCode code);

/// Runs one CLI invocation. `args` excludes the program name. Diagnostics go
/// to `err` as a single line; results go to `out`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qacost
