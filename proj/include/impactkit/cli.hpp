#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace impactkit::cli {

/// Runs one toolkit command. `args` excludes the program name, e.g.
/// {"evaluate", "--in", "preds.jsonl"}. Machine-readable JSON goes to
/// `out` (human tables instead when --pretty is passed); errors appear on
/// `err` as a single JSON line. Exit codes: 0 success, 1 runtime error,
/// 2 usage error.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace impactkit::cli
