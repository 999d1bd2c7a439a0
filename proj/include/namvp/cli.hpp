#pragma once

#include <iosfwd>

namespace namvp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the `namvp` tool: gen, train, eval, refine, solve-ot,
/// export-plan. Returns 0 on success, 1 on usage or input errors, 2 on
/// numerical failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace namvp
