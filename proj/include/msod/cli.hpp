#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msod::cli {

// Exit codes: 0 success, 2 validation error or bad usage, 3 infeasible,
// 4 numerical non-convergence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace msod::cli
