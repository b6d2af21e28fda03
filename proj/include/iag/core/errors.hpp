#pragma once

#include <stdexcept>
#include <string>

namespace iag {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

// Bad arguments to an operation (K > n, empty voter list, ...).
struct ParameterError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

struct InvalidLetterError : Error {
    explicit InvalidLetterError(char letter)
        : Error(std::string("invalid option letter '") + letter + "'"), letter(letter) {}
    char letter;
};

struct BackendUnavailable : Error {
    BackendUnavailable(const std::string& what, int attempts)
        : Error(what + " (attempts=" + std::to_string(attempts) + ")"), attempts(attempts) {}
    int attempts;
};

// Every query failed or returned nothing.
struct RetrievalEmpty : Error {
    using Error::Error;
};

// No usable context could be assembled.
struct EmptyContext : Error {
    using Error::Error;
};

struct StageError : Error {
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage(std::move(stage)) {}
    std::string stage;
};

}  // namespace iag
