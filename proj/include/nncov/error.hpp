#pragma once

#include <stdexcept>
#include <string>

namespace nncov {

/// Classifies failures so the CLI can map each to its own exit code.
enum class ErrorKind {
    configuration,
    input,
    format,
    validation,
    capability,
    numeric,
    io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace nncov
