#pragma once

#include <ostream>

namespace ambiprobe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the `ambiprobe` command. Returns 0 on success, 1 when the
/// inputs fail validation or an analysis cannot be completed, 2 on usage
/// errors.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ambiprobe
