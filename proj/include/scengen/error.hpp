#pragma once

#include <stdexcept>
#include <string>

namespace scengen {

/// Broad failure class; the CLI maps each to a distinct exit code.
enum class ErrorCategory { Config, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

// Data-category errors.

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(ErrorCategory::Data, "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateError : public Error {
public:
    explicit DuplicateError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

/// A station's observed segment has a hole, or the calendar index is not uniform.
class CoverageError : public Error {
public:
    explicit CoverageError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class AggregationError : public Error {
public:
    explicit AggregationError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

class EvidenceCoverageError : public Error {
public:
    explicit EvidenceCoverageError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

// Numeric-category errors.

/// Zero sample variance; the caller must treat the variable as a constant.
class DegenerateMarginalError : public Error {
public:
    explicit DegenerateMarginalError(const std::string& what)
        : Error(ErrorCategory::Numeric, what) {}
};

class CollinearityError : public Error {
public:
    CollinearityError(const std::string& node, const std::string& what)
        : Error(ErrorCategory::Numeric, "node '" + node + "': " + what), node_(node) {}
    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

// Config-category errors.

class ConfigurationError : public Error {
public:
    explicit ConfigurationError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

}  // namespace scengen
