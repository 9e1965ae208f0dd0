#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fragmem/error.hpp"

namespace fragmem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitProvider = 3;
inline constexpr int kExitConfig = 4;

int exit_code_for(ErrorKind kind);

/// Entry point behind the fragmem executable. `args` excludes the program
/// name. Errors print one line to `err`:
///   fragmem-error code=<exit> kind=<kind>: <message>
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fragmem
