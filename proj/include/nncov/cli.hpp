#pragma once

#include "nncov/error.hpp"

#include <ostream>

namespace nncov {

// Process exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_internal = 1;
inline constexpr int exit_usage = 2;

/// Exit code for a failure of the given kind (3..9, in ErrorKind order).
int exit_code(ErrorKind kind) noexcept;

/// Runs the command line. Diagnostics go to `err` as one line; summaries to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace nncov
