#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stdec::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

/// Entry point behind the `stdec` executable. `args` excludes the program
/// name. Data goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stdec::cli
