#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgeperf {

enum class ErrorCode {
    parse_error,
    duplicate_id,
    invariant_violation,
    unknown_model,
    missing_coefficient,
    domain_error,
    nonpositive_tbt,
    infeasible_budget,
    unit_undeclared,
    insufficient_data,
    degenerate_design,
    length_mismatch,
    zero_actual,
    empty_input,
    zero_prefill,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

// Non-fatal conditions (implausible wattage, degenerate decay fit, ...) are
// appended here when the caller supplies a sink.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
    if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace edgeperf
