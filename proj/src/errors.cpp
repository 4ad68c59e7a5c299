#include "errors.hpp"

namespace bifrail {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::parse: return "parse";
        case ErrorCode::domain_overflow: return "domain-overflow";
        case ErrorCode::non_convergence: return "non-convergence";
        case ErrorCode::bracket: return "bracket";
        case ErrorCode::unstable_point: return "unstable-point";
        case ErrorCode::integrity: return "integrity";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace bifrail
