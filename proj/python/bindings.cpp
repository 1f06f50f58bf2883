#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "edgeperf/energy.hpp"
#include "edgeperf/fitting.hpp"
#include "edgeperf/latency.hpp"
#include "edgeperf/planner.hpp"
#include "edgeperf/profiles.hpp"

namespace py = pybind11;
using namespace edgeperf;

namespace {

std::vector<Point> to_points(const std::vector<std::pair<double, double>>& xy) {
    std::vector<Point> out;
    out.reserve(xy.size());
    for (auto [x, y] : xy) out.push_back({x, y});
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Latency, energy and cost models for reasoning LLMs on edge GPUs";

    py::register_exception<Error>(m, "EdgePerfError", PyExc_ValueError);

    py::class_<ModelProfile>(m, "ModelProfile")
        .def_readonly("id", &ModelProfile::id)
        .def_readonly("param_b", &ModelProfile::param_b)
        .def_property_readonly("precision", [](const ModelProfile& p) { return std::string(to_string(p.precision)); })
        .def_property_readonly("capabilities", [](const ModelProfile& p) {
            std::vector<std::string> caps;
            if (p.prefill_latency) caps.emplace_back("prefill_latency");
            if (p.decode_latency) caps.emplace_back("decode_latency");
            if (p.prefill_power) caps.emplace_back("prefill_power");
            if (p.prefill_energy) caps.emplace_back("prefill_energy");
            if (p.decode_power) caps.emplace_back("decode_power");
            if (p.decode_energy) caps.emplace_back("decode_energy");
            return caps;
        })
        .def("__repr__", [](const ModelProfile& p) { return "<ModelProfile " + p.id + ">"; });

    py::class_<ProfileRegistry>(m, "ProfileRegistry")
        .def("get", &ProfileRegistry::get, py::return_value_policy::reference_internal)
        .def("ids", &ProfileRegistry::ids)
        .def("__len__", &ProfileRegistry::size)
        .def("__contains__", [](const ProfileRegistry& r, const std::string& id) { return r.find(id) != nullptr; });

    m.def("load_profiles", [](const std::string& text) { return load_profiles(text); });
    m.def("serialize_profiles", &serialize_profiles);
    m.def("default_profiles", &default_profiles, py::return_value_policy::reference);
    m.def("validate_profile", [](const ModelProfile& p) {
        std::vector<std::pair<std::string, std::string>> out;
        for (auto& issue : validate_profile(p)) out.emplace_back(issue.field, issue.message);
        return out;
    });

    py::class_<MeasurementRecord>(m, "MeasurementRecord")
        .def_property_readonly("phase", [](const MeasurementRecord& r) { return std::string(to_string(r.phase)); })
        .def_readonly("input_len", &MeasurementRecord::input_len)
        .def_readonly("output_len", &MeasurementRecord::output_len)
        .def_readonly("latency_s", &MeasurementRecord::latency_s)
        .def_readonly("power_w", &MeasurementRecord::power_w)
        .def_readonly("energy_j", &MeasurementRecord::energy_j);
    m.def("load_measurements", [](const std::string& text) { return load_measurements(text); });

    py::class_<LatencyBreakdown>(m, "LatencyBreakdown")
        .def_readonly("prefill", &LatencyBreakdown::prefill_s)
        .def_readonly("decode", &LatencyBreakdown::decode_s)
        .def_readonly("total", &LatencyBreakdown::total_s);

    m.def("padded_length", &padded_length, py::arg("input_len"));
    m.def("prefill_latency", &prefill_latency, py::arg("profile"), py::arg("input_len"));
    m.def("tbt", &tbt, py::arg("profile"), py::arg("context_len"));
    m.def("decode_latency", &decode_latency, py::arg("profile"), py::arg("input_len"), py::arg("output_len"));
    m.def("total_latency", &total_latency, py::arg("profile"), py::arg("input_len"), py::arg("output_len"));
    m.def(
        "max_output_tokens",
        [](const ModelProfile& p, Tokens input_len, double budget_s) {
            return max_output_tokens(p, input_len, LatencyBudget(budget_s));
        },
        py::arg("profile"), py::arg("input_len"), py::arg("budget_s"));

    m.def("prefill_power", &prefill_power, py::arg("profile"), py::arg("input_len"));
    m.def("prefill_energy_per_token", &prefill_energy_per_token, py::arg("profile"), py::arg("input_len"));
    m.def(
        "decode_power",
        [](const ModelProfile& p, Tokens pos, double cap) {
            Warnings w;
            double watts = decode_power(p, pos, &w, cap);
            return py::make_tuple(watts, w);
        },
        py::arg("profile"), py::arg("output_pos"), py::arg("cap_watts") = kDefaultPlatformCapWatts,
        "Returns (watts, warnings).");
    m.def(
        "decode_energy",
        [](const ModelProfile& p, Tokens i, Tokens o) { return decode_energy(p, i, o); },
        py::arg("profile"), py::arg("input_len"), py::arg("output_len"));
    m.def(
        "total_energy",
        [](const ModelProfile& p, Tokens i, Tokens o) { return total_energy(p, i, o); },
        py::arg("profile"), py::arg("input_len"), py::arg("output_len"));

    py::class_<CostBreakdown>(m, "CostBreakdown")
        .def_readonly("energy_cost", &CostBreakdown::energy_cost)
        .def_readonly("hardware_cost", &CostBreakdown::hardware_cost)
        .def_readonly("total", &CostBreakdown::total);
    m.def(
        "cost_per_million_tokens",
        [](Tokens tokens, double duration_s, double energy_kwh, double electricity, double hardware_rate) {
            return cost_per_million_tokens({tokens, duration_s, energy_kwh}, {electricity, hardware_rate});
        },
        py::arg("tokens"), py::arg("duration_s"), py::arg("energy_kwh"), py::arg("electricity") = 0.15,
        py::arg("hardware_rate") = 0.045);

    m.def(
        "fit_prefill_latency",
        [](const std::vector<MeasurementRecord>& rs) {
            auto f = fit_prefill_latency(rs);
            return py::make_tuple(f.coefficients.a, f.coefficients.b, f.coefficients.c, f.residual_sse);
        },
        "Returns (a, b, c, sse).");
    m.def(
        "fit_decode_latency",
        [](const std::vector<MeasurementRecord>& rs) {
            auto f = fit_decode_latency(rs);
            return py::make_tuple(f.coefficients.m, f.coefficients.n, f.residual_sse);
        },
        "Returns (m, n, sse).");
    m.def(
        "fit_log_curve",
        [](const std::vector<std::pair<double, double>>& xy, double min_x) {
            auto f = fit_log_curve(to_points(xy), min_x);
            return py::make_tuple(f.coefficients.alpha, f.coefficients.beta, f.residual_sse);
        },
        py::arg("points"), py::arg("min_x") = 1.0, "Returns (alpha, beta, sse).");
    m.def(
        "fit_exp_decay",
        [](const std::vector<std::pair<double, double>>& xy) {
            auto f = fit_exp_decay(to_points(xy));
            return py::make_tuple(f.coefficients.A, f.coefficients.lambda, f.coefficients.C, f.residual_sse);
        },
        "Returns (A, lambda, C, sse).");
    m.def("mape", [](const std::vector<double>& p, const std::vector<double>& a) { return mape(p, a); });

    py::class_<ConfigPoint>(m, "ConfigPoint")
        .def_readonly("model_id", &ConfigPoint::model_id)
        .def_property_readonly("technique", [](const ConfigPoint& p) { return std::string(to_string(p.technique)); })
        .def_readonly("token_budget", &ConfigPoint::token_budget)
        .def_readonly("accuracy_pct", &ConfigPoint::accuracy_pct)
        .def_readonly("avg_tokens", &ConfigPoint::avg_tokens)
        .def_readonly("latency_s", &ConfigPoint::latency_s)
        .def_readonly("cost_per_mtok", &ConfigPoint::cost_per_mtok)
        .def_readonly("scaling_factor", &ConfigPoint::scaling_factor)
        .def("__repr__", [](const ConfigPoint& p) {
            return "<ConfigPoint " + p.model_id + " " + std::string(to_string(p.technique)) + ">";
        });

    py::class_<PhaseRatios>(m, "PhaseRatios")
        .def_readonly("token_ratio", &PhaseRatios::token_ratio)
        .def_readonly("latency_ratio", &PhaseRatios::latency_ratio);

    m.def("load_config_table", [](const std::string& text) { return load_config_table(text); });
    m.def("default_config_table", [] { return load_config_table(default_config_table_csv()); });
    m.def(
        "pareto_frontier",
        [](const std::vector<ConfigPoint>& pts, const std::string& objectives) {
            return pareto_frontier(pts, parse_objectives(objectives));
        },
        py::arg("points"), py::arg("objectives") = "accuracy,latency");
    m.def("best_under_latency", [](const std::vector<ConfigPoint>& pts, double budget_s) {
        return best_under_latency(pts, LatencyBudget(budget_s));
    });
    m.def("best_under_cost",
          [](const std::vector<ConfigPoint>& pts, double budget) { return best_under_cost(pts, budget); });
    m.def("majority_vote", [](const std::vector<std::string>& answers) { return majority_vote(answers); });
    m.def("phase_ratios", [](const std::vector<MeasurementRecord>& rs) { return phase_ratios(rs); });
}
