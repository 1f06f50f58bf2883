#include "edgeperf/error.hpp"

namespace edgeperf {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::duplicate_id: return "DuplicateId";
        case ErrorCode::invariant_violation: return "InvariantViolation";
        case ErrorCode::unknown_model: return "UnknownModel";
        case ErrorCode::missing_coefficient: return "MissingCoefficient";
        case ErrorCode::domain_error: return "DomainError";
        case ErrorCode::nonpositive_tbt: return "NonpositiveTBT";
        case ErrorCode::infeasible_budget: return "InfeasibleBudget";
        case ErrorCode::unit_undeclared: return "UnitUndeclared";
        case ErrorCode::insufficient_data: return "InsufficientData";
        case ErrorCode::degenerate_design: return "DegenerateDesign";
        case ErrorCode::length_mismatch: return "LengthMismatch";
        case ErrorCode::zero_actual: return "ZeroActual";
        case ErrorCode::empty_input: return "EmptyInput";
        case ErrorCode::zero_prefill: return "ZeroPrefill";
    }
    return "Error";
}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, std::string(to_string(code)) + ": " + message);
}

}  // namespace edgeperf
