#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace iclv {

// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNotConverged = 2 };

// Subcommands: design, simulate, estimate, effects, psych, report, summarize.
// Results go to files or `out`; logs go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace iclv
