#pragma once

#include <stdexcept>
#include <string>

namespace fracrisk {

/// Parameter outside an operation's domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A sampled subordinator path does not reach the requested time.
class HorizonExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear solve did not converge; the message carries iteration diagnostics.
class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computed field broke its bound or monotonicity invariants.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unsupported run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fracrisk
