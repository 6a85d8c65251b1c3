#pragma once

#include <iosfwd>

namespace dagfm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Subcommands: train-teacher, distill, finetune, eval, bench, oracle-check,
// convert-movielens. Returns 0 on success, 1 on a validation, oracle or
// training failure and 2 on a usage error.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dagfm
