#pragma once

#include <string>
#include <vector>

namespace fdm {

// Entry point behind the command-line binary. Returns the process exit code:
// 0 on success, 1 on runtime failure, 2 on usage or config errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace fdm
