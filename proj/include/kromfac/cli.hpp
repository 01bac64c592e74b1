#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kromfac {

/// Entry point of the command-line tool. `args` excludes the program name.
/// Returns 0 on success, 1 on a runtime failure and 2 on a usage error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(const std::vector<std::string>& args);

}  // namespace kromfac
