#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptb {

/// Entry point of the `ptb` tool; `args` excludes the program name.
/// Subcommands: bench, verify, model, dist. Returns 0 on success, 1 when a
/// verification fails or a run aborts, 2 on usage or configuration errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptb
