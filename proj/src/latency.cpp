#include "edgeperf/latency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgeperf {

namespace {

const PrefillLatencyCoeffs& prefill_coeffs(const ModelProfile& p) {
    if (!p.prefill_latency) {
        fail(ErrorCode::missing_coefficient, "profile '" + p.id + "' has no prefill latency coefficients");
    }
    return *p.prefill_latency;
}

const DecodeLatencyCoeffs& decode_coeffs(const ModelProfile& p) {
    if (!p.decode_latency) {
        fail(ErrorCode::missing_coefficient, "profile '" + p.id + "' has no decode latency coefficients");
    }
    return *p.decode_latency;
}

void require_input(Tokens input_len) {
    if (input_len < 1) fail(ErrorCode::domain_error, "input length must be >= 1, got " + std::to_string(input_len));
}

double decode_closed_form(const DecodeLatencyCoeffs& c, double input_len, double output_len) {
    return c.n * output_len + c.m * (input_len * output_len + output_len * (output_len - 1.0) / 2.0);
}

}  // namespace

LatencyBudget::LatencyBudget(double limit) : limit_s(limit) {
    if (!(limit > 0)) fail(ErrorCode::domain_error, "latency budget must be > 0");
}

Tokens padded_length(Tokens input_len) {
    require_input(input_len);
    return (input_len + kPadQuantum - 1) / kPadQuantum * kPadQuantum;
}

double prefill_latency(const ModelProfile& profile, Tokens input_len) {
    const auto& c = prefill_coeffs(profile);
    const double pad = static_cast<double>(padded_length(input_len));
    return c.a * pad * pad + c.b * pad + c.c;
}

double tbt(const ModelProfile& profile, Tokens context_len) {
    const auto& c = decode_coeffs(profile);
    if (context_len < 1) fail(ErrorCode::domain_error, "context length must be >= 1");
    double v = c.m * static_cast<double>(context_len) + c.n;
    if (!(v > 0)) {
        fail(ErrorCode::nonpositive_tbt, "tbt for '" + profile.id + "' is nonpositive at context " +
                                             std::to_string(context_len));
    }
    return v;
}

double decode_latency(const ModelProfile& profile, Tokens input_len, Tokens output_len) {
    const auto& c = decode_coeffs(profile);
    require_input(input_len);
    if (output_len < 0) fail(ErrorCode::domain_error, "output length must be >= 0");
    return decode_closed_form(c, static_cast<double>(input_len), static_cast<double>(output_len));
}

LatencyBreakdown total_latency(const ModelProfile& profile, Tokens input_len, Tokens output_len) {
    LatencyBreakdown out;
    out.prefill_s = prefill_latency(profile, input_len);
    out.decode_s = decode_latency(profile, input_len, output_len);
    out.total_s = out.prefill_s + out.decode_s;
    return out;
}

Tokens max_output_tokens(const ModelProfile& profile, Tokens input_len, LatencyBudget budget) {
    const auto& dc = decode_coeffs(profile);
    const double prefill = prefill_latency(profile, input_len);
    const double limit = budget.limit_s;
    if (limit < prefill) {
        fail(ErrorCode::infeasible_budget, "budget " + std::to_string(limit) + " s is below the prefill latency " +
                                               std::to_string(prefill) + " s");
    }
    tbt(profile, input_len);  // throws if the very first token is already nonpositive

    const double input = static_cast<double>(input_len);
    auto total = [&](Tokens o) { return prefill + decode_closed_form(dc, input, static_cast<double>(o)); };

    // With a negative slope, the last output position with positive tbt is
    // context n/|m| - 1; beyond it the model is meaningless.
    Tokens cap = std::numeric_limits<Tokens>::max() / 4;
    if (dc.m < 0) {
        const double zero_context = dc.n / -dc.m;
        Tokens last_context = static_cast<Tokens>(std::ceil(zero_context)) - 1;
        while (dc.m * static_cast<double>(last_context) + dc.n <= 0) --last_context;
        cap = last_context - input_len + 1;
        if (total(cap) <= limit) {
            fail(ErrorCode::nonpositive_tbt, "budget reaches past context " + std::to_string(last_context) +
                                                 " where tbt for '" + profile.id + "' turns nonpositive");
        }
    }

    // total(O) - prefill = (m/2) O^2 + (n + m (I - 1/2)) O
    const double quad = dc.m / 2.0;
    const double lin = dc.n + dc.m * (input - 0.5);
    const double rhs = limit - prefill;
    double guess;
    if (quad == 0.0) {
        guess = rhs / lin;
    } else {
        const double disc = std::max(0.0, lin * lin + 4.0 * quad * rhs);
        guess = 2.0 * rhs / (lin + std::sqrt(disc));
    }
    guess = std::clamp(std::floor(guess), 0.0, static_cast<double>(cap));
    Tokens out = static_cast<Tokens>(guess);
    while (out > 0 && total(out) > limit) --out;
    while (out < cap && total(out + 1) <= limit) ++out;
    return out;
}

}  // namespace edgeperf
