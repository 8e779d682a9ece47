#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pairsel {

// Malformed value literal. `position` is a byte offset into the parsed text.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t position, std::string expected)
        : std::runtime_error("parse error at offset " + std::to_string(position) +
                             ": expected " + expected),
          position_(position),
          expected_(std::move(expected)) {}

    std::size_t position() const { return position_; }
    const std::string& expected() const { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

// Invalid configuration or precondition violation at an API boundary.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runner infrastructure failure (cannot spawn, cannot write temp files).
// Candidate misbehavior is never a RunnerError; it maps to ERROR/TIMEOUT outcomes.
class RunnerError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Oracle-level failure: script mismatch, no parseable generated inputs, ...
class OracleError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Network/HTTP failure after the retry budget. Distinct from unparseable replies.
class TransportError : public OracleError {
    using OracleError::OracleError;
};

// Parameter outside a formula's domain (theory module).
class DomainError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation-protocol failure (all tasks excluded, undefined test, ...).
class EvalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pairsel
