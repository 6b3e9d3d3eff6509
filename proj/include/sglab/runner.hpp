#pragma once

// Batch subcommands: config in, report files and an exit status out.

#include <iosfwd>
#include <string>
#include <vector>

#include "sglab/config.hpp"

namespace sglab {

const std::vector<std::string>& subcommand_names();

/// Runs one subcommand. Progress goes to `out`, diagnostics to `err`.
/// Returns 0, or 1 config error, 2 solver error, 3 invariant violation.
int run_subcommand(const std::string& subcommand, const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace sglab
