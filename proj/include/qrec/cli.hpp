#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qrec {

/// Entry point behind the `qrec` binary. `args` excludes the program name.
/// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace qrec
