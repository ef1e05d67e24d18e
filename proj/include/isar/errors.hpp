#pragma once

#include <stdexcept>
#include <string>

namespace isar {

/// Invalid argument or invariant violation at an API boundary.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A randomized generator could not produce a valid object within its retry budget.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// SNR requested for a zero-power signal.
struct UndefinedSnrError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Malformed or unsupported file contents.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Experiment configuration rejected; field() names the offending JSON path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what)
        , field_(std::move(field))
    {
    }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace isar
