#include "edgeperf/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "edgeperf/energy.hpp"
#include "edgeperf/fitting.hpp"
#include "edgeperf/latency.hpp"
#include "edgeperf/planner.hpp"
#include "edgeperf/profiles.hpp"
#include "json.hpp"

namespace edgeperf::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

// A MAPE value: two decimals in text, full precision in JSON.
struct Percent {
    double value;
};

using Value = std::variant<std::string, double, long long, Percent>;
using Record = std::vector<std::pair<std::string, Value>>;

class Emitter {
public:
    Emitter(std::ostream& out, bool json) : out_(out), json_(json) {}

    void single(const Record& r) {
        if (json_) {
            out_ << to_json(r).dump(2) << '\n';
        } else {
            out_ << to_text(r) << '\n';
        }
    }

    void list(const std::vector<Record>& rs) {
        if (json_) {
            ordered_json arr = ordered_json::array();
            for (const auto& r : rs) arr.push_back(to_json(r));
            out_ << arr.dump(2) << '\n';
        } else {
            for (const auto& r : rs) out_ << to_text(r) << '\n';
        }
    }

    void raw_json(const std::string& text) { out_ << text << '\n'; }

private:
    static std::string fmt(const char* spec, double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, spec, v);
        return buf;
    }

    static std::string to_text(const Record& r) {
        std::string line;
        for (const auto& [key, value] : r) {
            if (!line.empty()) line += ' ';
            line += key + '=';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, std::string>) {
                        line += v;
                    } else if constexpr (std::is_same_v<T, double>) {
                        line += fmt("%.6g", v);
                    } else if constexpr (std::is_same_v<T, long long>) {
                        line += std::to_string(v);
                    } else {
                        line += fmt("%.2f", v.value);
                    }
                },
                value);
        }
        return line;
    }

    static ordered_json to_json(const Record& r) {
        ordered_json j = ordered_json::object();
        for (const auto& [key, value] : r) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, Percent>) {
                        j[key] = v.value;
                    } else {
                        j[key] = v;
                    }
                },
                value);
        }
        return j;
    }

    std::ostream& out_;
    bool json_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::parse_error, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::parse_error, "cannot write '" + path + "'");
    out << text << '\n';
}

ProfileRegistry resolve_profiles(const std::string& flag) {
    if (!flag.empty()) return load_profiles(read_file(flag));
    if (const char* env = std::getenv("EDGEPERF_PROFILES"); env != nullptr && *env != '\0') {
        return load_profiles(read_file(env));
    }
    return default_profiles();
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse_error:
        case ErrorCode::duplicate_id:
        case ErrorCode::invariant_violation:
        case ErrorCode::unknown_model:
        case ErrorCode::domain_error:
            return kUsageError;
        default:
            return kDomainError;
    }
}

std::string capabilities(const ModelProfile& p) {
    std::string out;
    auto add = [&](bool present, const char* name) {
        if (!present) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    add(p.prefill_latency.has_value(), "prefill_latency");
    add(p.decode_latency.has_value(), "decode_latency");
    add(p.prefill_power.has_value(), "prefill_power");
    add(p.prefill_energy.has_value(), "prefill_energy");
    add(p.decode_power.has_value(), "decode_power");
    add(p.decode_energy.has_value(), "decode_energy");
    return out.empty() ? "none" : out;
}

Record config_record(const ConfigPoint& p) {
    Record r{{"model", p.model_id}, {"technique", std::string(to_string(p.technique))}};
    if (p.token_budget) r.emplace_back("token_budget", static_cast<long long>(*p.token_budget));
    r.emplace_back("accuracy_pct", p.accuracy_pct);
    r.emplace_back("avg_tokens", p.avg_tokens);
    if (p.latency_s) r.emplace_back("latency_s", *p.latency_s);
    if (p.cost_per_mtok) r.emplace_back("cost_per_mtok", *p.cost_per_mtok);
    r.emplace_back("scaling_factor", static_cast<long long>(p.scaling_factor));
    return r;
}

void report_warnings(const Warnings& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Latency, energy and cost models for reasoning LLMs on edge GPUs", "edgeperf"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string profiles_path;
    bool json = false;
    app.add_option("--profiles", profiles_path, "Profile JSON file (default: $EDGEPERF_PROFILES, then built-in)");
    app.add_flag("--json", json, "Emit JSON instead of key=value lines");

    std::string model;
    long long input = 0, output = 0;
    double budget = 0.0;

    auto* list_models = app.add_subcommand("list-models", "List known model profiles");

    auto* predict = app.add_subcommand("predict", "Predict prefill, decode and total latency");
    bool with_energy = false;
    predict->add_option("--model", model, "Profile id")->required();
    predict->add_option("--input", input, "Input tokens")->required();
    predict->add_option("--output", output, "Output tokens")->required();
    predict->add_flag("--energy", with_energy, "Also report total energy in joules");

    auto* invert = app.add_subcommand("invert", "Largest output length that fits a latency budget");
    invert->add_option("--model", model, "Profile id")->required();
    invert->add_option("--input", input, "Input tokens")->required();
    invert->add_option("--budget", budget, "Latency budget in seconds")->required();

    auto* fit = app.add_subcommand("fit", "Fit model coefficients from a measurement CSV");
    std::string data_path, kind, out_path;
    fit->add_option("--data", data_path, "Measurement CSV")->required();
    fit->add_option("--kind", kind, "What to fit")
        ->required()
        ->check(CLI::IsMember({"prefill-latency", "decode-latency", "prefill-power", "decode-power",
                               "prefill-energy", "decode-energy"}));
    fit->add_option("--out", out_path, "Also write the JSON fragment to this file");

    auto* cost = app.add_subcommand("cost", "Cost per million tokens from a usage sample");
    long long tokens = 0;
    double duration = 0.0, energy_kwh = 0.0;
    CostParams params;
    cost->add_option("--tokens", tokens, "Tokens processed")->required();
    cost->add_option("--duration", duration, "Wall time in seconds")->required();
    cost->add_option("--energy-kwh", energy_kwh, "Energy used in kWh")->required();
    cost->add_option("--electricity", params.electricity_per_kwh, "Dollars per kWh")->capture_default_str();
    cost->add_option("--hardware-rate", params.hardware_per_hour, "Amortized hardware dollars per hour")
        ->capture_default_str();

    auto* plan = app.add_subcommand("plan", "Select configurations from a results table");
    std::string table_path, pareto, technique_filter, model_filter;
    std::optional<double> latency_budget, cost_budget;
    plan->add_option("--table", table_path, "Results CSV (default: built-in table)");
    auto* lat_opt = plan->add_option("--latency-budget", latency_budget, "Best accuracy within this latency (s)");
    auto* cost_opt = plan->add_option("--cost-budget", cost_budget, "Best accuracy within this cost ($/Mtok)");
    auto* pareto_opt = plan->add_option("--pareto", pareto, "Pareto frontier over e.g. accuracy,latency");
    lat_opt->excludes(cost_opt)->excludes(pareto_opt);
    cost_opt->excludes(pareto_opt);
    plan->add_option("--technique", technique_filter, "Only rows with this technique");
    plan->add_option("--model-filter", model_filter, "Only rows for this model id");

    auto* validate = app.add_subcommand("validate", "MAPE of a profile against measured rows");
    std::optional<double> max_mape;
    validate->add_option("--data", data_path, "Measurement CSV")->required();
    validate->add_option("--model", model, "Profile id")->required();
    validate->add_option("--max-mape", max_mape, "Fail (exit 1) when any phase exceeds this MAPE (%)");

    auto* vote = app.add_subcommand("vote", "Majority vote over answers");
    std::vector<std::string> answers;
    vote->add_option("answers", answers, "Answer labels")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kUsageError;
    }

    Emitter emit(out, json);
    try {
        if (*list_models) {
            auto registry = resolve_profiles(profiles_path);
            std::vector<Record> rows;
            for (const auto& [id, p] : registry) {
                rows.push_back({{"id", id},
                                {"param_b", p.param_b},
                                {"precision", std::string(to_string(p.precision))},
                                {"capabilities", capabilities(p)}});
            }
            emit.list(rows);
        } else if (*predict) {
            auto registry = resolve_profiles(profiles_path);
            const auto& profile = registry.get(model);
            auto br = total_latency(profile, input, output);
            Record r{{"prefill", br.prefill_s}, {"decode", br.decode_s}, {"total", br.total_s}};
            if (with_energy) {
                Warnings warnings;
                r.emplace_back("energy_j", total_energy(profile, input, output, &warnings));
                report_warnings(warnings, err);
            }
            emit.single(r);
        } else if (*invert) {
            auto registry = resolve_profiles(profiles_path);
            const auto& profile = registry.get(model);
            Tokens best = max_output_tokens(profile, input, LatencyBudget(budget));
            emit.single({{"max_output_tokens", static_cast<long long>(best)},
                         {"total", total_latency(profile, input, best).total_s}});
        } else if (*fit) {
            auto records = load_measurements(read_file(data_path));
            std::string fragment;
            Record text;
            Warnings warnings;
            if (kind == "prefill-latency") {
                auto f = fit_prefill_latency(records);
                fragment = to_json_fragment(f);
                text = {{"a", f.coefficients.a}, {"b", f.coefficients.b}, {"c", f.coefficients.c},
                        {"residual_sse", f.residual_sse}, {"points_used", static_cast<long long>(f.points_used)}};
            } else if (kind == "decode-latency") {
                auto f = fit_decode_latency(records);
                fragment = to_json_fragment(f);
                text = {{"m", f.coefficients.m}, {"n", f.coefficients.n}, {"residual_sse", f.residual_sse},
                        {"points_used", static_cast<long long>(f.points_used)}};
            } else {
                const bool prefill_side = kind.rfind("prefill", 0) == 0;
                const bool power = kind.find("power") != std::string::npos;
                std::vector<Point> pts;
                for (const auto& r : records) {
                    if ((r.phase == Phase::prefill) != prefill_side) continue;
                    const double x = static_cast<double>(prefill_side ? r.input_len : r.output_len);
                    if (power && r.power_w) pts.push_back({x, *r.power_w});
                    if (!power && r.energy_j && x > 0) pts.push_back({x, *r.energy_j / x});
                }
                FitResult<PiecewiseFit> f;
                if (kind == "decode-energy") {
                    auto lf = fit_log_curve(pts);
                    f.coefficients.kind = PiecewiseKind::energy;
                    f.coefficients.energy.threshold = 0.0;
                    f.coefficients.energy.log_alpha = lf.coefficients.alpha;
                    f.coefficients.energy.log_beta = lf.coefficients.beta;
                    f.residual_sse = lf.residual_sse;
                    f.points_used = lf.points_used;
                } else {
                    f = fit_piecewise(pts, power ? PiecewiseKind::power : PiecewiseKind::energy);
                }
                if (!power) f.coefficients.energy.unit = EnergyUnit::joules_per_token;
                if (kind == "decode-power") {
                    // Decode holds the floor strictly below the threshold: move
                    // it to the first observed x past the fitted breakpoint.
                    double next = kUnbounded;
                    for (const auto& p : pts) {
                        if (p.x > f.coefficients.power.threshold) next = std::min(next, p.x);
                    }
                    f.coefficients.power.threshold = next;
                }
                std::string key = kind;
                key[key.find('-')] = '_';
                fragment = to_json_fragment(f, key);
                text.emplace_back("kind", kind);
                if (power) {
                    const auto& m = f.coefficients.power;
                    text.insert(text.end(), {{"floor_w", m.floor_watts}, {"threshold", m.threshold},
                                             {"log_alpha", m.log_alpha}, {"log_beta", m.log_beta}});
                } else {
                    const auto& m = f.coefficients.energy;
                    text.insert(text.end(), {{"exp_A", m.exp_A}, {"exp_lambda", m.exp_lambda}, {"exp_C", m.exp_C},
                                             {"threshold", m.threshold}, {"log_alpha", m.log_alpha},
                                             {"log_beta", m.log_beta}});
                }
                text.emplace_back("residual_sse", f.residual_sse);
                text.emplace_back("points_used", static_cast<long long>(f.points_used));
                warnings = f.warnings;
            }
            report_warnings(warnings, err);
            if (!out_path.empty()) write_file(out_path, fragment);
            if (json) {
                emit.raw_json(fragment);
            } else {
                emit.single(text);
            }
        } else if (*cost) {
            auto c = cost_per_million_tokens({tokens, duration, energy_kwh}, params);
            emit.single({{"energy_cost", c.energy_cost}, {"hardware_cost", c.hardware_cost}, {"total", c.total}});
        } else if (*plan) {
            auto points = load_config_table(table_path.empty() ? std::string(default_config_table_csv())
                                                                : read_file(table_path));
            if (!technique_filter.empty()) parse_technique(technique_filter);
            std::erase_if(points, [&](const ConfigPoint& p) {
                if (!technique_filter.empty() && to_string(p.technique) != technique_filter) return true;
                return !model_filter.empty() && p.model_id != model_filter;
            });
            if (latency_budget || cost_budget) {
                auto best = latency_budget ? best_under_latency(points, LatencyBudget(*latency_budget))
                                           : best_under_cost(points, *cost_budget);
                if (!best) {
                    err << "error: no configuration fits the budget\n";
                    return kDomainError;
                }
                emit.single(config_record(*best));
            } else {
                auto objectives = parse_objectives(pareto.empty() ? "accuracy,latency" : pareto);
                std::vector<Record> rows;
                for (const auto& p : pareto_frontier(points, objectives)) rows.push_back(config_record(p));
                emit.list(rows);
            }
        } else if (*validate) {
            auto records = load_measurements(read_file(data_path));
            auto registry = resolve_profiles(profiles_path);
            const auto& profile = registry.get(model);
            std::vector<Record> rows;
            bool over_gate = false;
            for (Phase phase : {Phase::prefill, Phase::decode}) {
                std::vector<double> predicted, actual;
                for (const auto& r : records) {
                    if (r.phase != phase) continue;
                    predicted.push_back(phase == Phase::prefill ? prefill_latency(profile, r.input_len)
                                                                : decode_latency(profile, r.input_len, r.output_len));
                    actual.push_back(r.latency_s);
                }
                if (actual.empty()) continue;
                const double m = mape(predicted, actual);
                if (max_mape && m > *max_mape) over_gate = true;
                rows.push_back({{"phase", std::string(to_string(phase))},
                                {"rows", static_cast<long long>(actual.size())},
                                {"mape_pct", Percent{m}}});
            }
            if (rows.empty()) fail(ErrorCode::empty_input, "no measurement rows in '" + data_path + "'");
            emit.list(rows);
            if (over_gate) {
                err << "error: MAPE above the --max-mape gate of " << *max_mape << "%\n";
                return kDomainError;
            }
        } else if (*vote) {
            auto winner = majority_vote(answers);
            long long count = std::count(answers.begin(), answers.end(), winner);
            emit.single({{"winner", winner}, {"count", count}, {"total", static_cast<long long>(answers.size())}});
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
    return kOk;
}

}  // namespace edgeperf::cli
