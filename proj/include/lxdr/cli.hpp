#pragma once

// The `lxdr` command line: fit, explain, eval, whatif, serve.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <iosfwd>
#include <string>
#include <vector>

namespace lxdr {

/// args excludes the program name. Artifacts go to `out` (or --output), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lxdr
