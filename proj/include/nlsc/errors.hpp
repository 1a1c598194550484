#pragma once

#include <stdexcept>
#include <string>

namespace nlsc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A kernel, flux or problem violates one of its structural hypotheses.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An argument is outside the domain an operation is defined on.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A closed-form expression cannot be evaluated (negative discriminant,
/// vanishing leading coefficient).
class FormulaError : public Error {
public:
    using Error::Error;
};

/// The adaptive ODE integrator could not make progress.
class IntegrationError : public Error {
public:
    using Error::Error;
};

/// Configuration parse or validation failure; `key()` is the dotted key path.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace nlsc
