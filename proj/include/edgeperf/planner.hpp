#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeperf/latency.hpp"
#include "edgeperf/profiles.hpp"

namespace edgeperf {

enum class Technique { base, hard_limit, soft_limit, no_reasoning, direct, budget_aware };

/// One deployment configuration row from a results table.
struct ConfigPoint {
    std::string model_id;
    Technique technique = Technique::base;
    std::optional<Tokens> token_budget;
    double accuracy_pct = 0.0;
    double avg_tokens = 0.0;
    std::optional<double> latency_s;      // absent rows are skipped by latency queries
    std::optional<double> cost_per_mtok;  // absent rows are skipped by cost queries
    int scaling_factor = 1;

    bool operator==(const ConfigPoint&) const = default;
};

struct Objectives {
    bool max_accuracy = false;
    bool min_latency = false;
    bool min_cost = false;

    [[nodiscard]] int count() const noexcept {
        return int(max_accuracy) + int(min_latency) + int(min_cost);
    }
};

/// Parses objective lists like "accuracy,latency". Throws DomainError.
Objectives parse_objectives(std::string_view text);

struct PhaseRatios {
    double token_ratio = 0.0;    // decode tokens per prefill token
    double latency_ratio = 0.0;  // decode seconds per prefill second
};

/// Parses `model_id,technique,token_budget,accuracy_pct,avg_tokens,latency_s,cost_per_mtok,scaling_factor`.
std::vector<ConfigPoint> load_config_table(std::string_view source);
std::string serialize_config_table(std::span<const ConfigPoint> points);

/// The shipped results table.
std::string_view default_config_table_csv() noexcept;

/// Non-dominated points under the chosen objectives, sorted by latency.
/// Needs at least one point and two objectives. Points missing a value for a
/// requested objective are not considered; exact duplicates are collapsed.
std::vector<ConfigPoint> pareto_frontier(std::span<const ConfigPoint> points, Objectives objectives);

/// Highest accuracy within the latency budget. Ties go to lower latency,
/// then lower cost, then model id.
std::optional<ConfigPoint> best_under_latency(std::span<const ConfigPoint> points, LatencyBudget budget);

/// Highest accuracy with cost <= budget (dollars per million tokens).
std::optional<ConfigPoint> best_under_cost(std::span<const ConfigPoint> points, double budget);

/// Most frequent label; ties go to whichever label appeared first.
std::string majority_vote(std::span<const std::string> answers);

/// Aggregate decode/prefill ratios. Prefill rows contribute input_len and
/// latency, decode rows output_len and latency.
PhaseRatios phase_ratios(std::span<const MeasurementRecord> records, Warnings* warnings = nullptr);

std::string_view to_string(Technique t) noexcept;
Technique parse_technique(std::string_view text);

}  // namespace edgeperf
