#include "qacost/error.hpp"

namespace qacost {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::infeasible: return "Infeasible";
        case ErrorCode::zero_yield: return "ZeroYield";
        case ErrorCode::degenerate_yield: return "DegenerateYield";
        case ErrorCode::budget_exceeded: return "BudgetExceeded";
        case ErrorCode::too_many_defects: return "TooManyDefects";
        case ErrorCode::inconsistent_mix: return "InconsistentMix";
        case ErrorCode::empty_input: return "EmptyInput";
        case ErrorCode::zero_pass: return "ZeroPass";
        case ErrorCode::unknown_defect: return "UnknownDefect";
        case ErrorCode::empty_substitution: return "EmptySubstitution";
        case ErrorCode::timeout: return "Timeout";
        case ErrorCode::endpoint_error: return "EndpointError";
        case ErrorCode::no_break_even: return "NoBreakEven";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::parse_error: return "ParseError";
    }
    return "Unknown";
}

}  // namespace qacost
