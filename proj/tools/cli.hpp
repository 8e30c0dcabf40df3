#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arc::cli {

/// Runs one `arc` command. Exit codes: 0 success, 1 diagnostics or errors, 2 usage errors.
/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arc::cli
