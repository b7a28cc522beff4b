#pragma once

#include <string>
#include <vector>

namespace mtl {

// Commands: gen-data, train, eval, ablation.
// Flags: --config <path> (required), --seed <u64>, --out-dir <path>.
// Exit codes: 0 success, 1 runtime failure, 2 config error.
// Outputs of a failed command are removed.
int run_cli(const std::vector<std::string>& args);

}  // namespace mtl
