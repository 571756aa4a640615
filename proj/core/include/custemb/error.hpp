#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace custemb {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    kSuccess = 0,
    kConfig = 2,
    kData = 3,
    kStage = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::kStage; }
};

/// Invalid or inconsistent configuration. `key()` names the offending setting when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message, std::string key = {})
        : Error(key.empty() ? message : key + ": " + message), message_(message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }
    /// The message without the key prefix.
    const std::string& message() const noexcept { return message_; }
    ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }

private:
    std::string message_;
    std::string key_;
};

class UnsupportedModelError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class SchemaError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

/// Malformed file content; carries the 1-based line number.
class FormatError : public Error {
public:
    FormatError(const std::string& message, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    ExitCode exit_code() const noexcept override { return ExitCode::kData; }

private:
    std::size_t line_;
};

/// A precondition on the numeric inputs of an operation was violated.
class DomainError : public Error {
public:
    using Error::Error;
};

class CorpusTooSmallError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace custemb
