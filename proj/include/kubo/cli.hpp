#pragma once

// Command-line front end. Verbs: eval, f, measure, check, decompose, catalog, nodes.
//
// Exit codes: 0 success, 1 suite or verification failure, 2 usage / parse /
// shape error, 3 PSD or singularity error, 4 quadrature non-convergence.

#include <iosfwd>
#include <string>
#include <vector>

namespace kubo {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kubo
