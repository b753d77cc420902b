#pragma once

#include <stdexcept>
#include <string>

namespace genrank {

/// Invalid configuration (bad key, bad value, inconsistent settings). CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (corpus files, example files, models). CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A pipeline stage aborted. Carries the stage name so the CLI can report
/// "stage <name> failed: <cause>". CLI exit code 3.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause)
        : std::runtime_error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace genrank
