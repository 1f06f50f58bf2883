#include "edgeperf/energy.hpp"

#include <cmath>
#include <sstream>

#include "edgeperf/latency.hpp"

namespace edgeperf {

namespace {

template <typename T>
const T& require(const std::optional<T>& model, const ModelProfile& p, const char* what) {
    if (!model) fail(ErrorCode::missing_coefficient, "profile '" + p.id + "' has no " + what + " model");
    return *model;
}

double joules_per_fitted_unit(EnergyUnit unit, const ModelProfile& p) {
    switch (unit) {
        case EnergyUnit::joules_per_token: return 1.0;
        case EnergyUnit::millijoules_per_token: return 1e-3;
        case EnergyUnit::fitted:
        case EnergyUnit::undeclared: break;
    }
    fail(ErrorCode::unit_undeclared, "prefill energy model of '" + p.id +
                                         "' does not declare a joule-based unit (declared: " +
                                         std::string(to_string(unit)) + ")");
}

}  // namespace

double log_of(double x, LogBase base) {
    return base == LogBase::natural ? std::log(x) : std::log10(x);
}

double evaluate(const PiecewiseEnergyModel& model, double x, LogBase base) {
    if (x <= model.threshold) return model.exp_A * std::exp(-model.exp_lambda * x) + model.exp_C;
    return model.log_alpha * log_of(x, base) + model.log_beta;
}

double prefill_power(const ModelProfile& profile, Tokens input_len) {
    const auto& m = require(profile.prefill_power, profile, "prefill power");
    if (input_len < 1) fail(ErrorCode::domain_error, "input length must be >= 1");
    const double x = static_cast<double>(input_len);
    if (x <= m.threshold) return m.floor_watts;
    return m.log_alpha * log_of(x, profile.log_base) + m.log_beta;
}

double prefill_energy_per_token(const ModelProfile& profile, Tokens input_len) {
    const auto& m = require(profile.prefill_energy, profile, "prefill energy");
    if (input_len < 1) fail(ErrorCode::domain_error, "input length must be >= 1");
    return evaluate(m, static_cast<double>(input_len), profile.log_base);
}

double decode_power(const ModelProfile& profile, Tokens output_pos, Warnings* warnings, double cap_watts) {
    const auto& m = require(profile.decode_power, profile, "decode power");
    if (output_pos < 1) fail(ErrorCode::domain_error, "output position must be >= 1");
    const double x = static_cast<double>(output_pos);
    const double watts = x < m.threshold ? m.floor_watts : m.log_alpha * log_of(x, profile.log_base) + m.log_beta;
    if (watts > cap_watts) {
        std::ostringstream msg;
        msg << "ImplausibleWatts: decode power of '" << profile.id << "' at output position " << output_pos
            << " is " << watts << " W, above the " << cap_watts << " W platform cap";
        warn(warnings, msg.str());
    }
    return watts;
}

double decode_energy(const ModelProfile& profile, Tokens input_len, Tokens output_len, Warnings* warnings,
                     double cap_watts) {
    require(profile.decode_power, profile, "decode power");
    require(profile.decode_latency, profile, "decode latency");
    if (input_len < 1) fail(ErrorCode::domain_error, "input length must be >= 1");
    if (output_len < 0) fail(ErrorCode::domain_error, "output length must be >= 0");

    // Only the first implausible position is reported.
    Warnings local;
    double joules = 0.0;
    for (Tokens i = 0; i < output_len; ++i) {
        joules += decode_power(profile, i + 1, local.empty() ? &local : nullptr, cap_watts) *
                  tbt(profile, input_len + i);
    }
    for (auto& w : local) warn(warnings, std::move(w));
    return joules;
}

double total_energy(const ModelProfile& profile, Tokens input_len, Tokens output_len, Warnings* warnings) {
    const auto& pe = require(profile.prefill_energy, profile, "prefill energy");
    require(profile.decode_power, profile, "decode power");
    require(profile.decode_latency, profile, "decode latency");
    const double scale = joules_per_fitted_unit(pe.unit, profile);
    const double prefill = prefill_energy_per_token(profile, input_len) * scale * static_cast<double>(input_len);
    return prefill + decode_energy(profile, input_len, output_len, warnings);
}

CostBreakdown cost_per_million_tokens(const UsageSample& usage, const CostParams& params) {
    if (usage.tokens < 1) fail(ErrorCode::domain_error, "usage must cover at least one token");
    if (!(usage.duration_s > 0)) fail(ErrorCode::domain_error, "usage duration must be > 0");
    if (!(usage.energy_kwh >= 0)) fail(ErrorCode::domain_error, "usage energy must be >= 0");
    if (!(params.electricity_per_kwh >= 0) || !(params.hardware_per_hour >= 0)) {
        fail(ErrorCode::domain_error, "prices must be >= 0");
    }
    const double millions = static_cast<double>(usage.tokens) / 1e6;
    CostBreakdown out;
    out.energy_cost = usage.energy_kwh * params.electricity_per_kwh / millions;
    out.hardware_cost = usage.duration_s / 3600.0 * params.hardware_per_hour / millions;
    out.total = out.energy_cost + out.hardware_cost;
    return out;
}

}  // namespace edgeperf
