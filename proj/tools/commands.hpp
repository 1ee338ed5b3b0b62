#pragma once

#include <ostream>

#include "manifest.hpp"

namespace pcseg::cli {

/// Parses argv and runs one subcommand. Returns the process exit code:
/// 0 success, 2 usage or input error, 3 shape mismatch, 4 internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs an already resolved invocation (also used to replay manifests).
/// Throws pcseg::Error on failure.
void run_invocation(const Invocation& inv, std::ostream& out);

int exit_code_for(const std::exception& e);

}  // namespace pcseg::cli
