#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grouptest {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorKind {
    Usage,       // bad flags or configuration
    Data,        // malformed or invalid input data
    Numerical    // singular or degenerate quantities
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// panel ingestion and validation
class BalanceError : public Error {
public:
    explicit BalanceError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row)
        : Error(ErrorKind::Data, what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class DuplicateError : public Error {
public:
    explicit DuplicateError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class PartitionError : public Error {
public:
    explicit PartitionError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class LabelError : public Error {
public:
    explicit LabelError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// numerics
class SingularError : public Error {
public:
    SingularError(const std::string& what, std::size_t pivot)
        : Error(ErrorKind::Numerical, what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

// configuration and orchestration
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class IndexError : public Error {
public:
    explicit IndexError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class EmptyError : public Error {
public:
    explicit EmptyError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

}  // namespace grouptest
