#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qacost {

enum class ErrorCode {
    invalid_argument,
    infeasible,
    zero_yield,
    degenerate_yield,
    budget_exceeded,
    too_many_defects,
    inconsistent_mix,
    empty_input,
    zero_pass,
    unknown_defect,
    empty_substitution,
    timeout,
    endpoint_error,
    no_break_even,
    io_error,
    parse_error,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library. `code()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// HTTP-style failure from a VQA endpoint; status 0 means no response was received.
class EndpointError : public Error {
public:
    EndpointError(int status, const std::string& message)
        : Error(ErrorCode::endpoint_error, message), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

}  // namespace qacost
