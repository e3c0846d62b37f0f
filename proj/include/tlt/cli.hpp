#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tlt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one `tlt` invocation. `args` excludes the program name. Errors are
// reported on `err` as "error: <ErrorCode>: <detail>".
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace tlt::cli
