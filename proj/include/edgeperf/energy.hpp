#pragma once

#include "edgeperf/profiles.hpp"

namespace edgeperf {

/// Jetson AGX Orin module power envelope.
inline constexpr double kDefaultPlatformCapWatts = 60.0;

struct CostParams {
    double electricity_per_kwh = 0.15;
    double hardware_per_hour = 0.045;
};

struct UsageSample {
    Tokens tokens = 0;
    double duration_s = 0.0;
    double energy_kwh = 0.0;
};

/// Dollars per million tokens.
struct CostBreakdown {
    double energy_cost = 0.0;
    double hardware_cost = 0.0;
    double total = 0.0;
};

double prefill_power(const ModelProfile& profile, Tokens input_len);

/// Energy per input token in the model's fitted unit.
double prefill_energy_per_token(const ModelProfile& profile, Tokens input_len);

/// Power while generating the token at 1-based output position `output_pos`.
/// Appends an ImplausibleWatts warning when the value exceeds `cap_watts`.
double decode_power(const ModelProfile& profile, Tokens output_pos,
                    Warnings* warnings = nullptr,
                    double cap_watts = kDefaultPlatformCapWatts);

/// Joules spent decoding `output_len` tokens after a prompt of `input_len`:
/// each token contributes its position's power times its own tbt.
double decode_energy(const ModelProfile& profile, Tokens input_len, Tokens output_len,
                     Warnings* warnings = nullptr,
                     double cap_watts = kDefaultPlatformCapWatts);

/// Prefill energy (per-token model times input length) plus decode energy, in
/// joules. Requires the prefill energy model to declare a joule-based unit.
double total_energy(const ModelProfile& profile, Tokens input_len, Tokens output_len,
                    Warnings* warnings = nullptr);

CostBreakdown cost_per_million_tokens(const UsageSample& usage, const CostParams& params);

// Raw branch evaluation, shared with validation and fitting.
double evaluate(const PiecewiseEnergyModel& model, double x, LogBase base);
double log_of(double x, LogBase base);

}  // namespace edgeperf
