#pragma once

#include <stdexcept>
#include <string>

namespace prefnav {

/// Broad classes of failure; the CLI maps these onto exit codes.
enum class ErrorKind {
    invalid_input,        // malformed map, bad arguments, out-of-domain values
    boundary_point,       // query point within tolerance of a hyperplane
    numerical_failure,    // LP kernel did not converge
    arrangement_incomplete,
    invalid_action,
    inadmissible_heading,
    modeling_error,       // e.g. empty admissible observation set
    degenerate_posterior,
    planning_error,
    not_found,
    conflict,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace prefnav
