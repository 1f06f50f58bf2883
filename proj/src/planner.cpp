#include "edgeperf/planner.hpp"

#include <algorithm>
#include <unordered_map>

#include "csv.hpp"

namespace edgeperf {

namespace {

constexpr std::string_view kConfigHeader =
    "model_id,technique,token_budget,accuracy_pct,avg_tokens,latency_s,cost_per_mtok,scaling_factor";

double value_or_inf(const std::optional<double>& v) {
    return v ? *v : std::numeric_limits<double>::infinity();
}

// Total order used for tie-breaking and output sorting.
bool selection_less(const ConfigPoint& a, const ConfigPoint& b) {
    if (a.accuracy_pct != b.accuracy_pct) return a.accuracy_pct > b.accuracy_pct;
    if (value_or_inf(a.latency_s) != value_or_inf(b.latency_s)) return value_or_inf(a.latency_s) < value_or_inf(b.latency_s);
    if (value_or_inf(a.cost_per_mtok) != value_or_inf(b.cost_per_mtok)) {
        return value_or_inf(a.cost_per_mtok) < value_or_inf(b.cost_per_mtok);
    }
    if (a.model_id != b.model_id) return a.model_id < b.model_id;
    if (a.technique != b.technique) return a.technique < b.technique;
    if (a.token_budget != b.token_budget) return a.token_budget < b.token_budget;
    if (a.scaling_factor != b.scaling_factor) return a.scaling_factor < b.scaling_factor;
    return a.avg_tokens < b.avg_tokens;
}

bool dominates(const ConfigPoint& a, const ConfigPoint& b, Objectives obj) {
    bool strict = false;
    auto compare = [&](double better, double worse) {
        if (better > worse) return false;
        if (better < worse) strict = true;
        return true;
    };
    // Each comparison is phrased as "smaller is better".
    if (obj.max_accuracy && !compare(-a.accuracy_pct, -b.accuracy_pct)) return false;
    if (obj.min_latency && !compare(*a.latency_s, *b.latency_s)) return false;
    if (obj.min_cost && !compare(*a.cost_per_mtok, *b.cost_per_mtok)) return false;
    return strict;
}

std::optional<ConfigPoint> best_of(std::vector<const ConfigPoint*> feasible) {
    if (feasible.empty()) return std::nullopt;
    return **std::min_element(feasible.begin(), feasible.end(),
                              [](const ConfigPoint* a, const ConfigPoint* b) { return selection_less(*a, *b); });
}

}  // namespace

std::string_view to_string(Technique t) noexcept {
    switch (t) {
        case Technique::base: return "base";
        case Technique::hard_limit: return "hard_limit";
        case Technique::soft_limit: return "soft_limit";
        case Technique::no_reasoning: return "no_reasoning";
        case Technique::direct: return "direct";
        case Technique::budget_aware: return "budget_aware";
    }
    return "base";
}

Technique parse_technique(std::string_view text) {
    for (auto t : {Technique::base, Technique::hard_limit, Technique::soft_limit, Technique::no_reasoning,
                   Technique::direct, Technique::budget_aware}) {
        if (text == to_string(t)) return t;
    }
    fail(ErrorCode::parse_error, "unknown technique '" + std::string(text) + "'");
}

Objectives parse_objectives(std::string_view text) {
    Objectives obj;
    for (auto part : csv::split(text)) {
        if (part == "accuracy") {
            obj.max_accuracy = true;
        } else if (part == "latency") {
            obj.min_latency = true;
        } else if (part == "cost") {
            obj.min_cost = true;
        } else {
            fail(ErrorCode::domain_error, "unknown objective '" + std::string(part) +
                                              "' (expected accuracy, latency or cost)");
        }
    }
    return obj;
}

std::vector<ConfigPoint> load_config_table(std::string_view source) {
    std::vector<ConfigPoint> out;
    for (const auto& row : csv::read(source, kConfigHeader)) {
        const auto& c = row.cells;
        auto violation = [&](const std::string& what) {
            fail(ErrorCode::invariant_violation, "line " + std::to_string(row.line) + ": " + what);
        };
        ConfigPoint p;
        p.model_id = std::string(c[0]);
        if (p.model_id.empty()) violation("model_id must be non-empty");
        try {
            p.technique = parse_technique(c[1]);
        } catch (const Error&) {
            fail(ErrorCode::parse_error, "line " + std::to_string(row.line) + ": unknown technique '" +
                                             std::string(c[1]) + "'");
        }
        if (!c[2].empty()) p.token_budget = csv::parse_int(c[2], row.line, "token_budget");
        p.accuracy_pct = csv::parse_double(c[3], row.line, "accuracy_pct");
        p.avg_tokens = csv::parse_double(c[4], row.line, "avg_tokens");
        p.latency_s = csv::parse_optional_double(c[5], row.line, "latency_s");
        p.cost_per_mtok = csv::parse_optional_double(c[6], row.line, "cost_per_mtok");
        p.scaling_factor = c[7].empty() ? 1 : static_cast<int>(csv::parse_int(c[7], row.line, "scaling_factor"));

        if (p.accuracy_pct < 0 || p.accuracy_pct > 100) violation("accuracy_pct must lie in [0, 100]");
        if (p.avg_tokens < 0) violation("avg_tokens must be >= 0");
        if (p.latency_s && !(*p.latency_s > 0)) violation("latency_s must be > 0");
        if (p.cost_per_mtok && !(*p.cost_per_mtok >= 0)) violation("cost_per_mtok must be >= 0");
        if (p.scaling_factor < 1) violation("scaling_factor must be >= 1");
        if (p.token_budget && *p.token_budget < 1) violation("token_budget must be >= 1");
        out.push_back(std::move(p));
    }
    return out;
}

std::string serialize_config_table(std::span<const ConfigPoint> points) {
    std::string out(kConfigHeader);
    out += '\n';
    for (const auto& p : points) {
        out += p.model_id + ',' + std::string(to_string(p.technique)) + ',';
        if (p.token_budget) out += std::to_string(*p.token_budget);
        out += ',' + csv::format_double(p.accuracy_pct) + ',' + csv::format_double(p.avg_tokens) + ',';
        if (p.latency_s) out += csv::format_double(*p.latency_s);
        out += ',';
        if (p.cost_per_mtok) out += csv::format_double(*p.cost_per_mtok);
        out += ',' + std::to_string(p.scaling_factor) + '\n';
    }
    return out;
}

std::vector<ConfigPoint> pareto_frontier(std::span<const ConfigPoint> points, Objectives objectives) {
    if (points.empty()) fail(ErrorCode::domain_error, "pareto frontier of an empty set");
    if (objectives.count() < 2) fail(ErrorCode::domain_error, "pareto frontier needs at least two objectives");

    std::vector<ConfigPoint> candidates;
    for (const auto& p : points) {
        if (objectives.min_latency && !p.latency_s) continue;
        if (objectives.min_cost && !p.cost_per_mtok) continue;
        candidates.push_back(p);
    }
    std::sort(candidates.begin(), candidates.end(), selection_less);
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<ConfigPoint> frontier;
    for (const auto& p : candidates) {
        bool dominated = std::any_of(candidates.begin(), candidates.end(),
                                     [&](const ConfigPoint& q) { return dominates(q, p, objectives); });
        if (!dominated) frontier.push_back(p);
    }
    std::stable_sort(frontier.begin(), frontier.end(), [](const ConfigPoint& a, const ConfigPoint& b) {
        return value_or_inf(a.latency_s) < value_or_inf(b.latency_s);
    });
    return frontier;
}

std::optional<ConfigPoint> best_under_latency(std::span<const ConfigPoint> points, LatencyBudget budget) {
    std::vector<const ConfigPoint*> feasible;
    for (const auto& p : points) {
        if (p.latency_s && *p.latency_s <= budget.limit_s) feasible.push_back(&p);
    }
    return best_of(std::move(feasible));
}

std::optional<ConfigPoint> best_under_cost(std::span<const ConfigPoint> points, double budget) {
    if (!(budget >= 0)) fail(ErrorCode::domain_error, "cost budget must be >= 0");
    std::vector<const ConfigPoint*> feasible;
    for (const auto& p : points) {
        if (p.cost_per_mtok && *p.cost_per_mtok <= budget) feasible.push_back(&p);
    }
    return best_of(std::move(feasible));
}

std::string majority_vote(std::span<const std::string> answers) {
    if (answers.empty()) fail(ErrorCode::empty_input, "majority vote over no answers");
    std::unordered_map<std::string_view, std::size_t> counts;
    for (const auto& a : answers) ++counts[a];
    // Scanning in input order means the first label to reach the maximum count
    // is also the earliest-occurring among the tied ones.
    std::string_view winner = answers.front();
    std::size_t best = 0;
    for (const auto& a : answers) {
        if (counts[a] > best) {
            best = counts[a];
            winner = a;
        }
    }
    return std::string(winner);
}

PhaseRatios phase_ratios(std::span<const MeasurementRecord> records, Warnings* warnings) {
    if (records.empty()) fail(ErrorCode::empty_input, "phase ratios over no records");
    double prefill_tokens = 0.0, prefill_s = 0.0, decode_tokens = 0.0, decode_s = 0.0;
    for (const auto& r : records) {
        if (r.phase == Phase::prefill) {
            prefill_tokens += static_cast<double>(r.input_len);
            prefill_s += r.latency_s;
        } else {
            decode_tokens += static_cast<double>(r.output_len);
            decode_s += r.latency_s;
        }
    }
    if (!(prefill_tokens > 0) || !(prefill_s > 0)) {
        fail(ErrorCode::zero_prefill, "prefill token and latency sums must be positive");
    }
    PhaseRatios out{decode_tokens / prefill_tokens, decode_s / prefill_s};
    if (decode_tokens == 0.0 || decode_s == 0.0) {
        warn(warnings, "no decode work in the records; ratios reported as 0");
        out = {};
    }
    return out;
}

}  // namespace edgeperf
