#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smbo {

/// Entry point of the `smbo` tool. Subcommands: init, run, report, best,
/// export-arch. Returns 0 on success, 1 on user error (bad flags, bad files,
/// mismatched store), 2 on internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smbo
