#pragma once

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"

namespace rdelab::cli {

enum Exit { kPass = 0, kNumericFailure = 1, kConfigError = 2 };

struct Command {
    std::string name;
    std::string help;
    Schema schema;
    // returns the exit code; artifacts are written by the command itself
    std::function<int(Json& cfg)> run;
};

const std::vector<Command>& commands();

}  // namespace rdelab::cli
