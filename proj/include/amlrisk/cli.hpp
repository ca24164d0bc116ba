#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "amlrisk/gateway.hpp"

namespace amlrisk::cli {

/// Runs one command; `args` excludes the program name. Exit code 0 on success; on failure a single JSON line
/// {"error": {...}} goes to `err` and the code is 1.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env = process_env());

}  // namespace amlrisk::cli
