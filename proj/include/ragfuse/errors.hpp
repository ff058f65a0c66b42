#pragma once

#include <stdexcept>
#include <string>

namespace ragfuse {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A record in an input file could not be parsed or failed validation.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A prompt does not fit the backend's input budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// The live backend failed after exhausting its retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// A scripted mock has no response for the requested exchange.
class ScriptError : public Error {
public:
    using Error::Error;
};

}  // namespace ragfuse
