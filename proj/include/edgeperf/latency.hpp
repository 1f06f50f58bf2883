#pragma once

#include "edgeperf/profiles.hpp"

namespace edgeperf {

inline constexpr Tokens kPadQuantum = 128;

struct LatencyBudget {
    double limit_s;

    explicit LatencyBudget(double limit);
};

struct LatencyBreakdown {
    double prefill_s = 0.0;
    double decode_s = 0.0;
    double total_s = 0.0;
};

/// Rounds up to the next multiple of 128 (tensor-core tile size).
Tokens padded_length(Tokens input_len);

double prefill_latency(const ModelProfile& profile, Tokens input_len);

/// Time between tokens at the given context length.
double tbt(const ModelProfile& profile, Tokens context_len);

/// Closed-form sum of tbt over contexts input_len .. input_len + output_len - 1.
double decode_latency(const ModelProfile& profile, Tokens input_len, Tokens output_len);

LatencyBreakdown total_latency(const ModelProfile& profile, Tokens input_len, Tokens output_len);

/// Largest output length whose total latency stays within the budget.
///
/// Solves the quadratic in O directly, then nudges the result by forward
/// evaluation so that total(O) <= limit < total(O + 1) holds exactly.
/// Throws InfeasibleBudget when even the prefill exceeds the budget, and
/// NonpositiveTBT when the budget reaches past the context length at which a
/// negative slope would drive tbt to zero.
Tokens max_output_tokens(const ModelProfile& profile, Tokens input_len, LatencyBudget budget);

}  // namespace edgeperf
