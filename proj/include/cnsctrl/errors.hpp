#pragma once

#include <stdexcept>
#include <string>

namespace cnsctrl {

// Parse failure in a config file; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// A config field is out of range or inconsistent; carries the field name.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& field, const std::string& msg)
        : std::runtime_error(field + ": " + msg), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Non-finite values appeared during optimization; carries the iteration.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, long iteration)
        : std::runtime_error(msg + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}
    long iteration() const { return iteration_; }

private:
    long iteration_;
};

// The explicit solver produced a non-positive density; carries the time level.
class PositivityError : public std::runtime_error {
public:
    PositivityError(const std::string& msg, int level)
        : std::runtime_error(msg + " (time level " + std::to_string(level) + ")"),
          level_(level) {}
    int level() const { return level_; }

private:
    int level_;
};

class CflError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cnsctrl
