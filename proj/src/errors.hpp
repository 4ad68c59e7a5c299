#pragma once

#include <stdexcept>
#include <string>

namespace bifrail {

enum class ErrorCode {
    invalid_argument,   // bad parameter / constraint violation
    parse,              // config or dataset file problems
    domain_overflow,    // exponent guard tripped in a hazard evaluation
    non_convergence,    // quadrature or calibration failed to converge
    bracket,            // root bracket invalid
    unstable_point,     // cross-ratio denominator underflow
    integrity,          // internal consistency violated (formula bug symptom)
    io,                 // filesystem
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bifrail
