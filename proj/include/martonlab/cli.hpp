#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace martonlab::cli {

inline constexpr int kExitOk = 0;
/// A confirmed violation or a refuted certificate.
inline constexpr int kExitViolation = 1;
inline constexpr int kExitInvalidInput = 2;

/// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace martonlab::cli
