#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeperf/error.hpp"

namespace edgeperf {

using Tokens = std::int64_t;

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

enum class Precision { fp16, w4a16 };

enum class LogBase { natural, base10 };

/// Quadratic prefill latency over the padded input length, in seconds.
struct PrefillLatencyCoeffs {
    double a = 0.0;  // s / token^2
    double b = 0.0;  // s / token
    double c = 0.0;  // s

    bool operator==(const PrefillLatencyCoeffs&) const = default;
};

/// Linear time-between-tokens model: tbt(context) = m * context + n.
struct DecodeLatencyCoeffs {
    double m = 0.0;  // s / context token
    double n = 0.0;  // s / output token

    bool operator==(const DecodeLatencyCoeffs&) const = default;
};

/// Constant below a transition point, logarithmic above it.
///
/// The prefill model holds the floor for `x <= threshold`; the decode model
/// holds it for `x < threshold`. An infinite threshold means a pure constant.
struct PiecewisePowerModel {
    double floor_watts = 0.0;
    double threshold = kUnbounded;
    double log_alpha = 0.0;
    double log_beta = 0.0;

    bool operator==(const PiecewisePowerModel&) const = default;
};

enum class EnergyUnit { undeclared, joules_per_token, millijoules_per_token, fitted };

/// Exponential decay up to `threshold`, logarithmic above it.
struct PiecewiseEnergyModel {
    double exp_A = 0.0;
    double exp_lambda = 0.0;
    double exp_C = 0.0;
    double threshold = kUnbounded;
    double log_alpha = 0.0;
    double log_beta = 0.0;
    EnergyUnit unit = EnergyUnit::undeclared;

    bool operator==(const PiecewiseEnergyModel&) const = default;
};

struct ModelProfile {
    std::string id;
    double param_b = 0.0;  // billions of parameters
    Precision precision = Precision::fp16;
    LogBase log_base = LogBase::natural;
    std::optional<PrefillLatencyCoeffs> prefill_latency;
    std::optional<DecodeLatencyCoeffs> decode_latency;
    std::optional<PiecewisePowerModel> prefill_power;
    std::optional<PiecewiseEnergyModel> prefill_energy;
    std::optional<PiecewisePowerModel> decode_power;
    std::optional<PiecewiseEnergyModel> decode_energy;

    bool operator==(const ModelProfile&) const = default;
};

/// Immutable, id-keyed collection of profiles. Iteration order is by id.
class ProfileRegistry {
public:
    ProfileRegistry() = default;
    explicit ProfileRegistry(std::vector<ModelProfile> profiles);

    [[nodiscard]] const ModelProfile& get(std::string_view id) const;
    [[nodiscard]] const ModelProfile* find(std::string_view id) const noexcept;
    [[nodiscard]] std::vector<std::string> ids() const;
    [[nodiscard]] std::size_t size() const noexcept { return profiles_.size(); }
    [[nodiscard]] bool empty() const noexcept { return profiles_.empty(); }

    [[nodiscard]] auto begin() const noexcept { return profiles_.begin(); }
    [[nodiscard]] auto end() const noexcept { return profiles_.end(); }

    bool operator==(const ProfileRegistry&) const = default;

private:
    std::map<std::string, ModelProfile, std::less<>> profiles_;
};

struct Issue {
    std::string field;
    std::string message;

    bool operator==(const Issue&) const = default;
};

/// Parses the JSON profile file. Throws ParseError, DuplicateId or
/// InvariantViolation.
ProfileRegistry load_profiles(std::string_view source);

/// Writes a registry back out in the same schema `load_profiles` reads.
std::string serialize_profiles(const ProfileRegistry& registry);

/// The coefficient tables shipped with the library.
const ProfileRegistry& default_profiles();
std::string_view default_profiles_json() noexcept;

inline const ModelProfile& get_profile(const ProfileRegistry& registry, std::string_view id) {
    return registry.get(id);
}

/// Checks type invariants and that every present model evaluates positive
/// for input/output lengths in [1, 4096]. Issues are returned, never thrown.
std::vector<Issue> validate_profile(const ModelProfile& profile);

// ---------------------------------------------------------------------------
// Measurements

enum class Phase { prefill, decode };

struct MeasurementRecord {
    Phase phase = Phase::prefill;
    Tokens input_len = 1;
    Tokens output_len = 0;
    double latency_s = 0.0;
    std::optional<double> power_w;
    std::optional<double> energy_j;

    bool operator==(const MeasurementRecord&) const = default;
};

/// Parses `phase,input_len,output_len,latency_s,power_w,energy_j` CSV.
std::vector<MeasurementRecord> load_measurements(std::string_view source);

std::string serialize_measurements(std::span<const MeasurementRecord> records);

std::string_view to_string(Precision p) noexcept;
std::string_view to_string(Phase p) noexcept;
std::string_view to_string(EnergyUnit u) noexcept;

}  // namespace edgeperf
