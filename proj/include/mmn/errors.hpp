#pragma once

#include <stdexcept>
#include <string>

namespace mmn {

// Bad sizes, unknown names, invalid option combinations. CLI maps this to
// exit code 2; everything else non-trivial maps to exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Divergence and numeric overflow during training.
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// External simulator invocation failures; carries the command diagnostics.
struct SimulatorError : std::runtime_error {
    explicit SimulatorError(const std::string& msg) : std::runtime_error(msg) {}
};

// File parse/IO failures with location context.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mmn
