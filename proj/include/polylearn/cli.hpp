#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polylearn {

/// Runs one command line. Artifacts go to --out or `out`; errors are one
/// line on `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace polylearn
