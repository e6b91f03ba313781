#include "prefnav/errors.hpp"

namespace prefnav {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::boundary_point: return "boundary_point";
        case ErrorKind::numerical_failure: return "numerical_failure";
        case ErrorKind::arrangement_incomplete: return "arrangement_incomplete";
        case ErrorKind::invalid_action: return "invalid_action";
        case ErrorKind::inadmissible_heading: return "inadmissible_heading";
        case ErrorKind::modeling_error: return "modeling_error";
        case ErrorKind::degenerate_posterior: return "degenerate_posterior";
        case ErrorKind::planning_error: return "planning_error";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::conflict: return "conflict";
    }
    return "unknown";
}

}  // namespace prefnav
