#pragma once

#include <ostream>

namespace strokeml::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command-line invocation. Returns 0 on success, 1 on usage
/// errors and 2 on data or runtime errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace strokeml::cli
