#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace paddy::cli {

/// Subcommands: synth, train, predict, phenology, report.
/// Exit codes: 0 ok, 1 usage error, 2 data error, 3 numeric failure.
int run(int argc, const char* const* argv);

/// `args` excludes the program name. Normal output goes to `out`; the resolved
/// configuration, warnings and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace paddy::cli
