#pragma once

#include <iosfwd>

namespace rootflow::cli {

// Entry point of the `rootflow` tool. Returns 0 on success, 1 on a runtime
// failure, 2 on a usage error. Output goes to `out`, diagnostics to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rootflow::cli
