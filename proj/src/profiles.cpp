#include "edgeperf/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "csv.hpp"
#include "edgeperf/energy.hpp"
#include "edgeperf/latency.hpp"
#include "json.hpp"
#include "profile_json.hpp"

namespace edgeperf {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr Tokens kValidationMax = 4096;
constexpr double kDecodeFloorWatts = 5.9;
constexpr double kDecodeThreshold = 64.0;

std::size_t line_of(std::string_view source, std::size_t byte) {
    byte = std::min(byte, source.size());
    return 1 + static_cast<std::size_t>(std::count(source.begin(), source.begin() + byte, '\n'));
}

// Reads coefficient objects, rejecting unknown keys. "note" and "fit" are
// annotations and are ignored.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string context) : obj_(obj), context_(std::move(context)) {
        if (!obj_.is_object()) fail(ErrorCode::parse_error, context_ + ": expected an object");
    }

    double number(const char* key) {
        auto v = optional_number(key);
        if (!v) fail(ErrorCode::parse_error, context_ + ": missing key '" + key + "'");
        return *v;
    }

    std::optional<double> optional_number(const char* key) {
        seen_.emplace_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return std::nullopt;
        if (!it->is_number()) fail(ErrorCode::parse_error, context_ + ": '" + key + "' must be a number");
        return it->get<double>();
    }

    std::optional<std::string> optional_string(const char* key) {
        seen_.emplace_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) fail(ErrorCode::parse_error, context_ + ": '" + key + "' must be a string");
        return it->get<std::string>();
    }

    const json* child(const char* key) {
        seen_.emplace_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    void finish() const {
        for (const auto& [key, _] : obj_.items()) {
            if (key == "note" || key == "fit") continue;
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                fail(ErrorCode::parse_error, context_ + ": unknown key '" + key + "'");
            }
        }
    }

private:
    const json& obj_;
    std::string context_;
    std::vector<std::string> seen_;
};

PiecewisePowerModel read_power(const json& obj, const std::string& ctx, bool decode) {
    ObjectReader r(obj, ctx);
    PiecewisePowerModel p;
    p.floor_watts = decode ? r.optional_number("floor_w").value_or(kDecodeFloorWatts) : r.number("floor_w");
    // An explicit null threshold means a single constant branch; an absent
    // one falls back to the decode default of 64 tokens.
    bool explicit_null = obj.contains("threshold") && obj["threshold"].is_null();
    p.threshold = r.optional_number("threshold").value_or(decode && !explicit_null ? kDecodeThreshold : kUnbounded);
    bool bounded = std::isfinite(p.threshold);
    p.log_alpha = bounded ? r.number("log_alpha") : r.optional_number("log_alpha").value_or(0.0);
    p.log_beta = bounded ? r.number("log_beta") : r.optional_number("log_beta").value_or(0.0);
    r.finish();
    return p;
}

EnergyUnit parse_unit(const std::string& s, const std::string& ctx) {
    if (s == "J/token") return EnergyUnit::joules_per_token;
    if (s == "mJ/token") return EnergyUnit::millijoules_per_token;
    if (s == "fitted") return EnergyUnit::fitted;
    fail(ErrorCode::parse_error, ctx + ": unknown unit '" + s + "' (expected J/token, mJ/token or fitted)");
}

PiecewiseEnergyModel read_energy(const json& obj, const std::string& ctx) {
    ObjectReader r(obj, ctx);
    PiecewiseEnergyModel e;
    e.exp_A = r.optional_number("exp_A").value_or(0.0);
    e.exp_lambda = r.optional_number("exp_lambda").value_or(0.0);
    e.exp_C = r.optional_number("exp_C").value_or(0.0);
    e.threshold = r.optional_number("threshold").value_or(kUnbounded);
    bool bounded = std::isfinite(e.threshold);
    e.log_alpha = bounded ? r.number("log_alpha") : r.optional_number("log_alpha").value_or(0.0);
    e.log_beta = bounded ? r.number("log_beta") : r.optional_number("log_beta").value_or(0.0);
    if (auto unit = r.optional_string("unit")) e.unit = parse_unit(*unit, ctx);
    r.finish();
    return e;
}

ModelProfile read_profile(const json& obj, std::size_t index) {
    std::string ctx = "profiles[" + std::to_string(index) + "]";
    ObjectReader r(obj, ctx);
    ModelProfile p;
    auto id = r.optional_string("id");
    if (!id) fail(ErrorCode::parse_error, ctx + ": missing key 'id'");
    p.id = *id;
    ctx += " (" + p.id + ")";
    p.param_b = r.number("param_b");
    auto precision = r.optional_string("precision").value_or("fp16");
    if (precision == "fp16") {
        p.precision = Precision::fp16;
    } else if (precision == "w4a16") {
        p.precision = Precision::w4a16;
    } else {
        fail(ErrorCode::parse_error, ctx + ": unknown precision '" + precision + "'");
    }
    auto log_base = r.optional_string("log_base").value_or("ln");
    if (log_base == "ln") {
        p.log_base = LogBase::natural;
    } else if (log_base == "log10") {
        p.log_base = LogBase::base10;
    } else {
        fail(ErrorCode::parse_error, ctx + ": unknown log_base '" + log_base + "'");
    }
    if (const json* j = r.child("prefill_latency")) {
        ObjectReader c(*j, ctx + ".prefill_latency");
        p.prefill_latency = PrefillLatencyCoeffs{c.number("a"), c.number("b"), c.number("c")};
        c.finish();
    }
    if (const json* j = r.child("decode_latency")) {
        ObjectReader c(*j, ctx + ".decode_latency");
        p.decode_latency = DecodeLatencyCoeffs{c.number("m"), c.number("n")};
        c.finish();
    }
    if (const json* j = r.child("prefill_power")) p.prefill_power = read_power(*j, ctx + ".prefill_power", false);
    if (const json* j = r.child("decode_power")) p.decode_power = read_power(*j, ctx + ".decode_power", true);
    if (const json* j = r.child("prefill_energy")) p.prefill_energy = read_energy(*j, ctx + ".prefill_energy");
    if (const json* j = r.child("decode_energy")) p.decode_energy = read_energy(*j, ctx + ".decode_energy");
    r.finish();
    return p;
}

// Field-local invariants. Shared by the loader (first issue is fatal) and
// validate_profile (all issues reported).
std::vector<Issue> field_issues(const ModelProfile& p) {
    std::vector<Issue> issues;
    auto check = [&](bool ok, std::string field, std::string message) {
        if (!ok) issues.push_back({std::move(field), std::move(message)});
    };
    auto finite = [](std::initializer_list<double> xs) {
        return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
    };
    check(!p.id.empty(), "id", "id must be non-empty");
    check(p.param_b > 0 && std::isfinite(p.param_b), "param_b", "param_b must be > 0");
    if (const auto& c = p.prefill_latency) {
        check(finite({c->a, c->b, c->c}), "prefill_latency", "coefficients must be finite");
        check(c->a > 0, "prefill_latency.a", "a must be > 0");
        check(c->c >= 0, "prefill_latency.c", "c must be >= 0");
    }
    if (const auto& c = p.decode_latency) {
        check(finite({c->m, c->n}), "decode_latency", "coefficients must be finite");
        check(c->n > 0, "decode_latency.n", "TBT nonpositive: n must be > 0");
    }
    auto power = [&](const std::optional<PiecewisePowerModel>& m, const std::string& name) {
        if (!m) return;
        check(finite({m->floor_watts, m->log_alpha, m->log_beta}), name, "coefficients must be finite");
        check(m->floor_watts > 0, name + ".floor_w", "floor_w must be > 0");
        check(m->threshold >= 0, name + ".threshold", "threshold must be >= 0");
    };
    auto energy = [&](const std::optional<PiecewiseEnergyModel>& m, const std::string& name) {
        if (!m) return;
        check(finite({m->exp_A, m->exp_lambda, m->exp_C, m->log_alpha, m->log_beta}), name,
              "coefficients must be finite");
        check(m->exp_lambda >= 0, name + ".exp_lambda", "exp_lambda must be >= 0");
        check(m->exp_C >= 0, name + ".exp_C", "exp_C must be >= 0");
        check(m->threshold >= 0, name + ".threshold", "threshold must be >= 0 or absent");
    };
    power(p.prefill_power, "prefill_power");
    power(p.decode_power, "decode_power");
    energy(p.prefill_energy, "prefill_energy");
    energy(p.decode_energy, "decode_energy");
    return issues;
}

void check_positive_over_domain(std::vector<Issue>& issues, const std::string& field,
                                const std::string& message, const std::function<double(Tokens)>& f) {
    for (Tokens x = 1; x <= kValidationMax; ++x) {
        double v = f(x);
        if (!(v > 0)) {
            issues.push_back({field, message + " at " + std::to_string(x) + " (value " + csv::format_double(v) + ")"});
            return;
        }
    }
}

}  // namespace

namespace detail {

ordered_json power_json(const PiecewisePowerModel& p) {
    ordered_json j;
    j["floor_w"] = p.floor_watts;
    if (std::isfinite(p.threshold)) {
        j["threshold"] = p.threshold;
    } else {
        j["threshold"] = nullptr;
    }
    j["log_alpha"] = p.log_alpha;
    j["log_beta"] = p.log_beta;
    return j;
}

ordered_json energy_json(const PiecewiseEnergyModel& e) {
    ordered_json j;
    j["exp_A"] = e.exp_A;
    j["exp_lambda"] = e.exp_lambda;
    j["exp_C"] = e.exp_C;
    if (std::isfinite(e.threshold)) j["threshold"] = e.threshold;
    j["log_alpha"] = e.log_alpha;
    j["log_beta"] = e.log_beta;
    if (e.unit != EnergyUnit::undeclared) j["unit"] = std::string(to_string(e.unit));
    return j;
}

}  // namespace detail

ProfileRegistry::ProfileRegistry(std::vector<ModelProfile> profiles) {
    for (auto& p : profiles) {
        auto issues = field_issues(p);
        if (!issues.empty()) {
            fail(ErrorCode::invariant_violation,
                 "profile '" + p.id + "': " + issues.front().field + ": " + issues.front().message);
        }
        std::string id = p.id;
        if (!profiles_.emplace(id, std::move(p)).second) {
            fail(ErrorCode::duplicate_id, "profile id '" + id + "' appears more than once");
        }
    }
}

const ModelProfile& ProfileRegistry::get(std::string_view id) const {
    if (const auto* p = find(id)) return *p;
    fail(ErrorCode::unknown_model, "no profile with id '" + std::string(id) + "'");
}

const ModelProfile* ProfileRegistry::find(std::string_view id) const noexcept {
    auto it = profiles_.find(id);
    return it == profiles_.end() ? nullptr : &it->second;
}

std::vector<std::string> ProfileRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(profiles_.size());
    for (const auto& [id, _] : profiles_) out.push_back(id);
    return out;
}

ProfileRegistry load_profiles(std::string_view source) {
    if (source.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
    json doc;
    try {
        doc = json::parse(source.begin(), source.end());
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse_error, "line " + std::to_string(line_of(source, e.byte)) + ": " + e.what());
    }
    if (!doc.is_object()) fail(ErrorCode::parse_error, "line 1: top level must be an object");
    ObjectReader top(doc, "profile file");
    const json* list = top.child("profiles");
    top.finish();
    if (list == nullptr) return {};
    if (!list->is_array()) fail(ErrorCode::parse_error, "'profiles' must be an array");
    std::vector<ModelProfile> profiles;
    for (std::size_t i = 0; i < list->size(); ++i) profiles.push_back(read_profile((*list)[i], i));
    return ProfileRegistry(std::move(profiles));
}

std::string serialize_profiles(const ProfileRegistry& registry) {
    ordered_json list = ordered_json::array();
    for (const auto& [id, p] : registry) {
        ordered_json j;
        j["id"] = p.id;
        j["param_b"] = p.param_b;
        j["precision"] = std::string(to_string(p.precision));
        if (p.log_base == LogBase::base10) j["log_base"] = "log10";
        if (p.prefill_latency) {
            j["prefill_latency"] = {{"a", p.prefill_latency->a}, {"b", p.prefill_latency->b}, {"c", p.prefill_latency->c}};
        }
        if (p.decode_latency) j["decode_latency"] = {{"m", p.decode_latency->m}, {"n", p.decode_latency->n}};
        if (p.prefill_power) j["prefill_power"] = detail::power_json(*p.prefill_power);
        if (p.prefill_energy) j["prefill_energy"] = detail::energy_json(*p.prefill_energy);
        if (p.decode_power) j["decode_power"] = detail::power_json(*p.decode_power);
        if (p.decode_energy) j["decode_energy"] = detail::energy_json(*p.decode_energy);
        list.push_back(std::move(j));
    }
    ordered_json doc;
    doc["profiles"] = std::move(list);
    return doc.dump(2) + "\n";
}

const ProfileRegistry& default_profiles() {
    static const ProfileRegistry registry = load_profiles(default_profiles_json());
    return registry;
}

std::vector<Issue> validate_profile(const ModelProfile& profile) {
    auto issues = field_issues(profile);
    if (!issues.empty()) return issues;
    const auto& p = profile;
    if (p.prefill_latency) {
        check_positive_over_domain(issues, "prefill_latency", "prefill latency nonpositive",
                                   [&](Tokens i) { return prefill_latency(p, i); });
    }
    if (p.decode_latency) {
        // tbt() throws on nonpositive values; evaluate the linear form directly.
        check_positive_over_domain(issues, "decode_latency", "TBT nonpositive", [&](Tokens i) {
            return p.decode_latency->m * static_cast<double>(i) + p.decode_latency->n;
        });
    }
    if (p.prefill_power) {
        check_positive_over_domain(issues, "prefill_power", "prefill power nonpositive",
                                   [&](Tokens i) { return prefill_power(p, i); });
    }
    if (p.decode_power) {
        check_positive_over_domain(issues, "decode_power", "decode power nonpositive",
                                   [&](Tokens o) { return decode_power(p, o); });
    }
    if (p.prefill_energy) {
        check_positive_over_domain(issues, "prefill_energy", "prefill energy nonpositive",
                                   [&](Tokens i) { return evaluate(*p.prefill_energy, double(i), p.log_base); });
    }
    if (p.decode_energy) {
        check_positive_over_domain(issues, "decode_energy", "decode energy nonpositive",
                                   [&](Tokens o) { return evaluate(*p.decode_energy, double(o), p.log_base); });
    }
    return issues;
}

std::vector<MeasurementRecord> load_measurements(std::string_view source) {
    static constexpr std::string_view kHeader = "phase,input_len,output_len,latency_s,power_w,energy_j";
    std::vector<MeasurementRecord> out;
    for (const auto& row : csv::read(source, kHeader)) {
        const auto& c = row.cells;
        MeasurementRecord r;
        if (c[0] == "prefill") {
            r.phase = Phase::prefill;
        } else if (c[0] == "decode") {
            r.phase = Phase::decode;
        } else {
            fail(ErrorCode::parse_error, "line " + std::to_string(row.line) + ": unknown phase '" + std::string(c[0]) + "'");
        }
        r.input_len = csv::parse_int(c[1], row.line, "input_len");
        r.output_len = c[2].empty() ? 0 : csv::parse_int(c[2], row.line, "output_len");
        r.latency_s = csv::parse_double(c[3], row.line, "latency_s");
        r.power_w = csv::parse_optional_double(c[4], row.line, "power_w");
        r.energy_j = csv::parse_optional_double(c[5], row.line, "energy_j");

        auto violation = [&](const std::string& what) {
            fail(ErrorCode::invariant_violation, "line " + std::to_string(row.line) + ": " + what);
        };
        if (r.input_len < 1) violation("input_len must be >= 1");
        if (r.output_len < 0) violation("output_len must be >= 0");
        if (!(r.latency_s > 0)) violation("latency_s must be > 0");
        if (r.power_w && !(*r.power_w > 0)) violation("power_w must be > 0 when present");
        if (r.energy_j && !(*r.energy_j > 0)) violation("energy_j must be > 0 when present");
        out.push_back(r);
    }
    return out;
}

std::string serialize_measurements(std::span<const MeasurementRecord> records) {
    std::string out = "phase,input_len,output_len,latency_s,power_w,energy_j\n";
    for (const auto& r : records) {
        out += to_string(r.phase);
        out += ',' + std::to_string(r.input_len) + ',' + std::to_string(r.output_len) + ',' +
               csv::format_double(r.latency_s) + ',';
        if (r.power_w) out += csv::format_double(*r.power_w);
        out += ',';
        if (r.energy_j) out += csv::format_double(*r.energy_j);
        out += '\n';
    }
    return out;
}

std::string_view to_string(Precision p) noexcept {
    return p == Precision::fp16 ? "fp16" : "w4a16";
}

std::string_view to_string(Phase p) noexcept {
    return p == Phase::prefill ? "prefill" : "decode";
}

std::string_view to_string(EnergyUnit u) noexcept {
    switch (u) {
        case EnergyUnit::joules_per_token: return "J/token";
        case EnergyUnit::millijoules_per_token: return "mJ/token";
        case EnergyUnit::fitted: return "fitted";
        case EnergyUnit::undeclared: break;
    }
    return "undeclared";
}

}  // namespace edgeperf
