#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace muvos {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Entry point of the `muvos` tool. `args` excludes the program name.
///
///   segment --frames DIR --first-mask FILE --out DIR [--config FILE]
///           [--motion-params FILE] [--msam-params FILE] [--emit-flow] [--emit-uncertainty]
///   eval    --pred DIR --gt DIR --report FILE [--tolerance-fraction X]
///   selftest [--seed N]
///
/// Returns 0 on success, 1 on invalid usage or input, 2 on I/O failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace muvos
