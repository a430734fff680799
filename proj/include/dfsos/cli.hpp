#pragma once

#include <iosfwd>

namespace dfsos {

/// Entry point of the `dfsos` tool. Returns the process exit code:
/// 0 success, 2 usage error, 3 data error, 4 numerical failure.
int run_cli(int argc, const char* const* argv);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dfsos
