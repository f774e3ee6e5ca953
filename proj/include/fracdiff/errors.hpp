#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fracdiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class GridError : public Error {
public:
    using Error::Error;
};

/// Series/asymptotic/integral evaluation could not reach the requested
/// tolerance. Carries the best estimate that was found.
class NonConvergent : public Error {
public:
    NonConvergent(const std::string& what, double best_value, double best_error)
        : Error(what), best_value_(best_value), best_error_(best_error) {}
    double best_value() const noexcept { return best_value_; }
    double best_error() const noexcept { return best_error_; }

private:
    double best_value_;
    double best_error_;
};

class SingularAtZero : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class PoleError : public Error {
public:
    using Error::Error;
};

class TailError : public Error {
public:
    using Error::Error;
};

/// Raised by dn_apply when a stage fails; `stage()` is the zero-based index
/// in application order (derivative stages first, final integral last).
class StageError : public Error {
public:
    StageError(const std::string& what, int stage) : Error(what), stage_(stage) {}
    int stage() const noexcept { return stage_; }

private:
    int stage_;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class BoundaryError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class DenominatorUnderflow : public Error {
public:
    using Error::Error;
};

class MassBoundViolation : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class ContractionViolated : public Error {
public:
    using Error::Error;
};

/// Malformed configuration. `field` is the dotted key path and `line` the
/// 1-based document line (0 when unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string field = {}, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), field_(std::move(field)), line_(line)
    {
    }
    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    std::string field_;
    int line_;
};

/// Well-formed configuration that breaks one or more invariants; every
/// violation is listed.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations))
    {
    }
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v)
    {
        std::string out = "invalid configuration";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> violations_;
};

}  // namespace fracdiff
