#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kindred {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a domain value violates an invariant. field() names the first
// offending field, e.g. "example_dialogues".
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& detail)
        : Error("invalid " + field + ": " + detail), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

// Caller broke an operation's precondition (e.g. a forbidden strategy handed
// to proactive generation).
class PreconditionViolation : public Error {
public:
    using Error::Error;
};

// ---- provider taxonomy ----

class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& what, int status = 0)
        : Error(what), status_(status) {}

    // HTTP status, or 0 when the failure happened below HTTP.
    int status() const noexcept { return status_; }

private:
    int status_;
};

class TimeoutError : public ProviderError {
public:
    explicit TimeoutError(const std::string& what) : ProviderError(what, 0) {}
};

class RateLimitedError : public ProviderError {
public:
    explicit RateLimitedError(const std::string& what) : ProviderError(what, 429) {}
};

class ExhaustedRetriesError : public ProviderError {
public:
    ExhaustedRetriesError(const std::string& what, int attempts)
        : ProviderError(what, 0), attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// The mock provider had no script line matching a request.
class MockExhaustedError : public ProviderError {
public:
    explicit MockExhaustedError(const std::string& what) : ProviderError(what, 0) {}
};

// A referenced agent, message or entry does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

class EmbeddingFailed : public Error {
public:
    using Error::Error;
};

// ---- persistence ----

class IoError : public Error {
public:
    using Error::Error;
};

class SequenceError : public Error {
public:
    using Error::Error;
};

class CorruptJournal : public Error {
public:
    CorruptJournal(std::size_t line, const std::string& detail)
        : Error("corrupt journal at line " + std::to_string(line) + ": " + detail), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace kindred
