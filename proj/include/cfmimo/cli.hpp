#pragma once

#include <string>
#include <vector>

namespace cfmimo {

/// Command-line entry point, also callable from tests. Exit codes: 0 ok,
/// 2 configuration error, 3 runtime error. env carries NAME=VALUE pairs for
/// CFMIMO_* config overrides; pass the process environment from main().
int run_cli(const std::vector<std::string>& args,
            const std::vector<std::pair<std::string, std::string>>& env = {});

} // namespace cfmimo
