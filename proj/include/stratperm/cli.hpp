#pragma once

#include <string>
#include <vector>

namespace stratperm {

// argv-style entry point. Exit codes: 0 success, 1 input/usage error,
// 2 oracle verification failure.
int run_cli(int argc, char** argv);
// Same, without the program name; used by tests.
int run_cli(const std::vector<std::string>& args);

} // namespace stratperm
