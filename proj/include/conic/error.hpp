#pragma once
#include <stdexcept>
#include <string>

namespace conic {

/// Base class of all library errors; `exit_code` is the CLI status for the class.
class Error : public std::runtime_error {
public:
    Error(const std::string& msg, int code, const char* kind)
        : std::runtime_error(msg), code_(code), kind_(kind) {}
    int exit_code() const { return code_; }
    const char* kind() const { return kind_; }

private:
    int code_;
    const char* kind_;
};

#define CONIC_ERROR_CLASS(Name, code, tag)                                   \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& msg) : Error(msg, code, tag) {}     \
    };

CONIC_ERROR_CLASS(ConfigError, 2, "config")
CONIC_ERROR_CLASS(DomainError, 3, "domain")
CONIC_ERROR_CLASS(ConvergenceError, 4, "no-convergence")
CONIC_ERROR_CLASS(PrecisionError, 5, "precision")
CONIC_ERROR_CLASS(TruncationError, 6, "truncation")
CONIC_ERROR_CLASS(CausalityError, 7, "causal-margin")
CONIC_ERROR_CLASS(IntegrityError, 8, "integrity")
CONIC_ERROR_CLASS(ResolutionError, 9, "insufficient-resolution")

#undef CONIC_ERROR_CLASS

}  // namespace conic
