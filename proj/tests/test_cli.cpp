#include "doctest.h"
#include "test_support.hpp"

#include <cstdlib>
#include <filesystem>

#include <unistd.h>

#include "edgeperf/cli.hpp"
#include "json.hpp"

using namespace edgeperf;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("edgeperf_cli_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }

    std::string write(const std::string& name, const std::string& text) const {
        auto p = path_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    }
    fs::path path() const { return path_; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

class ScopedEnv {
public:
    ScopedEnv(const char* name, const std::string& value) : name_(name) { ::setenv(name, value.c_str(), 1); }
    ~ScopedEnv() { ::unsetenv(name_); }

private:
    const char* name_;
};

std::string data_path(const std::string& relative) { return std::string(EDGEPERF_DATA_DIR) + "/" + relative; }

constexpr const char* kOneProfile = R"({"profiles": [{"id": "dsr1-qwen-14b", "param_b": 14, "precision": "fp16",
  "prefill_latency": {"a": 1e-6, "b": 0, "c": 1},
  "decode_latency": {"m": 0, "n": 1}}]})";

}  // namespace

TEST_CASE("predict") {
    auto r = run({"predict", "--model", "dsr1-qwen-14b", "--input", "512", "--output", "128"});
    CHECK(r.code == 0);
    CHECK(r.out == "prefill=0.782797 decode=24.0192 total=24.802\n");
    CHECK(r.err.empty());
}

TEST_CASE("predict with energy") {
    auto r = run({"predict", "--model", "dsr1-qwen-1.5b", "--input", "128", "--output", "0", "--energy"});
    CHECK(r.code == 0);
    CHECK(r.out.find("energy_j=0.274") != std::string::npos);

    auto hot = run({"predict", "--model", "dsr1-qwen-14b", "--input", "512", "--output", "128", "--energy"});
    CHECK(hot.code == 0);
    CHECK(hot.err.find("ImplausibleWatts") != std::string::npos);

    auto missing = run({"predict", "--model", "dsr1-qwen-1.5b-w4", "--input", "128", "--output", "1"});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("MissingCoefficient") != std::string::npos);
}

TEST_CASE("invert") {
    auto r = run({"invert", "--model", "dsr1-qwen-14b", "--input", "512", "--budget", "30"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("max_output_tokens=155 ", 0) == 0);

    auto infeasible = run({"invert", "--model", "dsr1-qwen-14b", "--input", "512", "--budget", "0.5"});
    CHECK(infeasible.code == 1);
    CHECK(infeasible.err.find("InfeasibleBudget") != std::string::npos);
    CHECK(std::count(infeasible.err.begin(), infeasible.err.end(), '\n') == 1);

    CHECK(run({"invert", "--model", "dsr1-qwen-14b", "--input", "512", "--budget", "-3"}).code == 2);
}

TEST_CASE("usage errors") {
    auto unknown = run({"predict", "--model", "nonexistent", "--input", "1", "--output", "1"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("UnknownModel") != std::string::npos);
    CHECK(unknown.out.empty());

    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"predict", "--model", "dsr1-qwen-14b", "--input", "512"}).code == 2);
    CHECK(run({"predict", "--model", "dsr1-qwen-14b", "--input", "x", "--output", "1"}).code == 2);
    CHECK(run({"predict", "--bogus"}).code == 2);
    CHECK(run({"predict", "--model", "dsr1-qwen-14b", "--input", "0", "--output", "1"}).code == 2);

    auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("predict") != std::string::npos);
}

TEST_CASE("list-models") {
    auto r = run({"list-models"});
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
    CHECK(r.out.find("id=dsr1-llama-8b param_b=8 precision=fp16 capabilities=prefill_latency,decode_latency,"
                     "prefill_energy,decode_power,decode_energy\n") != std::string::npos);
}

TEST_CASE("profile resolution precedence") {
    TempDir dir;
    const auto file = dir.write("p.json", kOneProfile);
    const auto other = dir.write("q.json", R"({"profiles": []})");
    const std::vector<std::string> predict{"predict", "--model", "dsr1-qwen-14b", "--input", "1000", "--output", "2"};

    auto builtin = run(predict);
    CHECK(builtin.code == 0);
    CHECK(builtin.out.rfind("prefill=2.02", 0) == 0);

    // Environment overrides the built-in copy.
    {
        ScopedEnv env("EDGEPERF_PROFILES", file);
        auto r = run(predict);
        CHECK(r.code == 0);
        // 1e-6 * 1024^2 + 1 = 2.04858, decode = 2 * 1.
        CHECK(r.out == "prefill=2.04858 decode=2 total=4.04858\n");

        // The flag overrides the environment.
        auto args = predict;
        args.insert(args.begin(), {"--profiles", other});
        auto flagged = run(args);
        CHECK(flagged.code == 2);
        CHECK(flagged.err.find("UnknownModel") != std::string::npos);
    }

    auto args = predict;
    args.insert(args.begin(), {"--profiles", file});
    CHECK(run(args).out == "prefill=2.04858 decode=2 total=4.04858\n");

    ScopedEnv env("EDGEPERF_PROFILES", dir.path().string() + "/absent.json");
    CHECK(run(predict).code == 2);
}

TEST_CASE("malformed profile file") {
    TempDir dir;
    auto bad = dir.write("bad.json", "{\"profiles\": [\n{\"id\": }]}");
    auto r = run({"--profiles", bad, "list-models"});
    CHECK(r.code == 2);
    CHECK(r.err.find("ParseError") != std::string::npos);
    CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("json output mirrors the text output") {
    auto text = run({"predict", "--model", "dsr1-qwen-14b", "--input", "512", "--output", "128"});
    auto json = run({"--json", "predict", "--model", "dsr1-qwen-14b", "--input", "512", "--output", "128"});
    REQUIRE(json.code == 0);
    auto j = nlohmann::json::parse(json.out);
    CHECK(j["total"].get<double>() == doctest::Approx(24.80204).epsilon(1e-6));
    char buf[64];
    std::snprintf(buf, sizeof buf, "total=%.6g", j["total"].get<double>());
    CHECK(text.out.find(buf) != std::string::npos);
    CHECK(j["prefill"].get<double>() + j["decode"].get<double>() == j["total"].get<double>());

    auto list = run({"--json", "list-models"});
    CHECK(nlohmann::json::parse(list.out).size() == 6);
}

TEST_CASE("identical invocations are byte-identical") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"predict", "--model", "dsr1-llama-8b", "--input", "333", "--output", "77"},
             {"--json", "plan", "--pareto", "accuracy,latency,cost"},
             {"list-models"},
             {"fit", "--data", data_path("appendix/decode_gpu_dsr1-qwen-14b.csv"), "--kind", "decode-latency"}}) {
        auto a = run(args);
        auto b = run(args);
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(a.err == b.err);
    }
}

TEST_CASE("cost") {
    auto r = run({"cost", "--tokens", "195624", "--duration", "4358", "--energy-kwh", "0.0317"});
    CHECK(r.code == 0);
    CHECK(r.out == "energy_cost=0.0243068 hardware_cost=0.278468 total=0.302775\n");

    auto zero = run({"cost", "--tokens", "10", "--duration", "1", "--energy-kwh", "1", "--electricity", "0",
                     "--hardware-rate", "0"});
    CHECK(zero.out == "energy_cost=0 hardware_cost=0 total=0\n");

    CHECK(run({"cost", "--tokens", "0", "--duration", "1", "--energy-kwh", "1"}).code == 2);
}

TEST_CASE("plan") {
    auto frontier = run({"plan", "--pareto", "accuracy,latency", "--technique", "base"});
    CHECK(frontier.code == 0);
    CHECK(frontier.out.find("model=DSR1-Qwen-14B technique=base accuracy_pct=80.6") != std::string::npos);

    auto fast = run({"plan", "--latency-budget", "5"});
    CHECK(fast.code == 0);
    CHECK(fast.out.rfind("model=Qwen2.5-7B-it technique=direct accuracy_pct=60.9", 0) == 0);

    auto cheap = run({"plan", "--cost-budget", "0.01"});
    CHECK(cheap.out.rfind("model=DSR1-Qwen-1.5B technique=hard_limit token_budget=256", 0) == 0);

    auto none = run({"plan", "--latency-budget", "0.5"});
    CHECK(none.code == 1);
    CHECK(none.out.empty());

    auto filtered = run({"plan", "--latency-budget", "1000", "--model-filter", "DSR1-Llama-8B"});
    CHECK(filtered.out.rfind("model=DSR1-Llama-8B technique=soft_limit token_budget=256", 0) == 0);

    CHECK(run({"plan", "--latency-budget", "5", "--cost-budget", "1"}).code == 2);
    CHECK(run({"plan", "--technique", "beam"}).code == 2);
    CHECK(run({"plan", "--pareto", "accuracy"}).code == 2);

    TempDir dir;
    auto table = dir.write("t.csv",
                           "model_id,technique,token_budget,accuracy_pct,avg_tokens,latency_s,cost_per_mtok,"
                           "scaling_factor\nx,base,,50,10,2,0.1,1\ny,base,,60,10,3,0.1,4\n");
    auto custom = run({"plan", "--table", table, "--latency-budget", "10"});
    CHECK(custom.out == "model=y technique=base accuracy_pct=60 avg_tokens=10 latency_s=3 cost_per_mtok=0.1 "
                        "scaling_factor=4\n");
}

TEST_CASE("fit") {
    TempDir dir;
    auto decode = run({"fit", "--data", data_path("appendix/decode_gpu_dsr1-qwen-14b.csv"), "--kind",
                       "decode-latency"});
    CHECK(decode.code == 0);
    CHECK(decode.out.rfind("m=", 0) == 0);

    auto out = dir.path() / "frag.json";
    auto json = run({"--json", "fit", "--data", data_path("appendix/prefill_gpu_dsr1-qwen-14b.csv"), "--kind",
                     "prefill-latency", "--out", out.string()});
    CHECK(json.code == 0);
    auto j = nlohmann::json::parse(json.out);
    CHECK(j.contains("prefill_latency"));
    REQUIRE(fs::exists(out));
    CHECK(nlohmann::json::parse(std::ifstream(out)) == j);

    // Without --out nothing is written.
    auto before = std::distance(fs::directory_iterator(dir.path()), fs::directory_iterator{});
    (void)run({"fit", "--data", data_path("appendix/decode_gpu_dsr1-qwen-14b.csv"), "--kind", "decode-latency"});
    CHECK(std::distance(fs::directory_iterator(dir.path()), fs::directory_iterator{}) == before);

    std::string power_csv = "phase,input_len,output_len,latency_s,power_w,energy_j\n";
    for (int o : {8, 16, 32, 48, 64, 128, 256, 512, 1024, 2048}) {
        const double w = o < 64 ? 5.9 : 0.756538 * std::log(double(o)) + 3.213711;
        power_csv += "decode,512," + std::to_string(o) + ",1," + std::to_string(w) + ",\n";
    }
    auto power = run({"fit", "--data", dir.write("power.csv", power_csv), "--kind", "decode-power"});
    CHECK(power.code == 0);
    CHECK(power.out.find("floor_w=5.9 threshold=64 log_alpha=0.756") != std::string::npos);

    auto few = run({"fit", "--data", data_path("appendix/decode_gpu_dsr1-qwen-14b.csv"), "--kind", "prefill-latency"});
    CHECK(few.code == 1);
    CHECK(few.err.find("InsufficientData") != std::string::npos);

    CHECK(run({"fit", "--data", data_path("appendix/decode_gpu_dsr1-qwen-14b.csv"), "--kind", "bogus"}).code == 2);
    CHECK(run({"fit", "--data", dir.write("bad.csv", "nope\n"), "--kind", "decode-latency"}).code == 2);
}

TEST_CASE("validate") {
    auto r = run({"validate", "--data", data_path("appendix/decode_gpu_dsr1-qwen-14b.csv"), "--model", "dsr1-qwen-14b"});
    CHECK(r.code == 0);
    REQUIRE(r.out.rfind("phase=decode rows=3 mape_pct=", 0) == 0);
    const double m = std::stod(r.out.substr(r.out.find("mape_pct=") + 9));
    CHECK(m <= 3.0);

    auto gated = run({"validate", "--data", data_path("appendix/decode_gpu_dsr1-qwen-14b.csv"), "--model",
                      "dsr1-qwen-14b", "--max-mape", "0.5"});
    CHECK(gated.code == 1);

    TempDir dir;
    std::string exact = "phase,input_len,output_len,latency_s,power_w,energy_j\n";
    for (auto [i, o] : {std::pair{512, 128}, {100, 10}}) {
        const double lat = 0.187 * o + 1.13e-6 * (double(i) * o + double(o) * (o - 1) / 2.0);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", lat);
        exact += "decode," + std::to_string(i) + "," + std::to_string(o) + "," + buf + ",,\n";
    }
    auto zero = run({"validate", "--data", dir.write("exact.csv", exact), "--model", "dsr1-qwen-14b"});
    CHECK(zero.out == "phase=decode rows=2 mape_pct=0.00\n");

    CHECK(run({"validate", "--data", dir.write("bad.csv", "phase,x\n"), "--model", "dsr1-qwen-14b"}).code == 2);
}

TEST_CASE("vote") {
    auto r = run({"vote", "B", "A", "B"});
    CHECK(r.code == 0);
    CHECK(r.out == "winner=B count=2 total=3\n");
    CHECK(run({"vote", "A", "B"}).out == "winner=A count=1 total=2\n");
    CHECK(run({"vote"}).code == 2);
}
