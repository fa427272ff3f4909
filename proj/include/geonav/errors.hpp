#pragma once

#include <stdexcept>
#include <string>

namespace geonav {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file (coefficient file, storm CSV, scenario, track).
class parse_error : public error {
public:
    parse_error(const std::string& what, long line = -1)
        : error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Input outside an operation's domain (pole, empty bin, zero velocity, ...).
class domain_error : public error {
public:
    using error::error;
};

/// QP solver failures: infeasible problem or iteration cap exceeded.
class solver_error : public error {
public:
    using error::error;
};

} // namespace geonav
