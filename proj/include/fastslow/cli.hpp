#pragma once

#include <iosfwd>

namespace fastslow {

/// Entry point of the `fastslow` command. Returns 0 on success, 1 on usage or
/// validation errors and 2 on runtime failures.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fastslow
