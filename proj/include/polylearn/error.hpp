#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace polylearn {

/// Process exit codes used by the CLI. Library errors carry one of these.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    parse = 3,
    capacity = 4,
    numeric = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, std::string kind, const std::string& message)
        : std::runtime_error(message), code_(code), kind_(std::move(kind)) {}

    ExitCode code() const noexcept { return code_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    ExitCode code_;
    std::string kind_;
};

/// Out-of-range indices, malformed arguments.
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& message)
        : Error(ExitCode::usage, "invalid_input", message) {}

protected:
    InvalidInput(std::string kind, const std::string& message)
        : Error(ExitCode::usage, std::move(kind), message) {}
};

/// A numeric parameter outside its admissible range (q, delta, ...).
class InvalidParameter : public InvalidInput {
public:
    explicit InvalidParameter(const std::string& message)
        : InvalidInput("invalid_parameter", message) {}
};

/// Structural problems with generator specs (degree too large, ...).
class InvalidSpec : public InvalidInput {
public:
    explicit InvalidSpec(const std::string& message)
        : InvalidInput("invalid_spec", message) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message)
        : Error(ExitCode::parse, "parse_error", message) {}
};

/// The profile space (or a dense diagnostic) exceeds its configured cap.
class CapacityError : public Error {
public:
    CapacityError(const std::string& message, std::string size)
        : Error(ExitCode::capacity, "capacity", message), size_(std::move(size)) {}

    /// Human-readable size that exceeded the cap, e.g. "3^7 = 2187".
    const std::string& size() const noexcept { return size_; }

private:
    std::string size_;
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message)
        : Error(ExitCode::numeric, "numeric", message) {}

protected:
    NumericError(std::string kind, const std::string& message)
        : Error(ExitCode::numeric, std::move(kind), message) {}
};

/// A noise model whose distribution is undefined for the given game.
class ModelUndefined : public NumericError {
public:
    explicit ModelUndefined(const std::string& message)
        : NumericError("model_undefined", message) {}
};

class InvalidDistribution : public NumericError {
public:
    explicit InvalidDistribution(const std::string& message)
        : NumericError("invalid_distribution", message) {}
};

class ScheduleInfeasible : public NumericError {
public:
    explicit ScheduleInfeasible(const std::string& message)
        : NumericError("schedule_infeasible", message) {}
};

class DegeneratePoa : public NumericError {
public:
    DegeneratePoa(double numerator, double denominator);

    double numerator() const noexcept { return numerator_; }
    double denominator() const noexcept { return denominator_; }

private:
    double numerator_;
    double denominator_;
};

}  // namespace polylearn
