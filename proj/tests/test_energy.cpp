#include "doctest.h"
#include "test_support.hpp"

#include <random>

#include "edgeperf/energy.hpp"
#include "edgeperf/latency.hpp"

using namespace edgeperf;
using edgeperf::test::code_of;
using edgeperf::test::profile;

namespace {

ModelProfile with_prefill_unit(EnergyUnit unit) {
    ModelProfile p = profile("dsr1-qwen-1.5b");
    p.prefill_energy->unit = unit;
    return p;
}

// Definitional decode-energy sum over explicit power and tbt formulas.
double ref_decode_energy(const ModelProfile& p, Tokens i, Tokens o) {
    const auto& pw = *p.decode_power;
    const auto& dl = *p.decode_latency;
    double s = 0.0;
    for (Tokens k = 0; k < o; ++k) {
        const double pos = double(k + 1);
        const double watts = pos < pw.threshold ? pw.floor_watts : pw.log_alpha * std::log(pos) + pw.log_beta;
        s += watts * (dl.m * double(i + k) + dl.n);
    }
    return s;
}

}  // namespace

TEST_CASE("prefill_power") {
    CHECK(prefill_power(profile("dsr1-qwen-1.5b"), 512) == 5.636);
    CHECK(prefill_power(profile("dsr1-qwen-1.5b"), 4096) == 5.636);
    CHECK(code_of([] { (void)prefill_power(profile("dsr1-llama-8b"), 512); }) == ErrorCode::missing_coefficient);
    CHECK(code_of([] { (void)prefill_power(profile("dsr1-qwen-1.5b"), 0); }) == ErrorCode::domain_error);
}

TEST_CASE("prefill_power log branch above the threshold") {
    ModelProfile p;
    p.id = "x";
    p.param_b = 1;
    p.prefill_power = PiecewisePowerModel{5.6, 800, 2.0, -7.0};
    CHECK(prefill_power(p, 800) == 5.6);
    CHECK(prefill_power(p, 801) == doctest::Approx(2.0 * std::log(801.0) - 7.0));
    p.log_base = LogBase::base10;
    CHECK(prefill_power(p, 1000) == doctest::Approx(2.0 * 3.0 - 7.0));
}

TEST_CASE("prefill_energy_per_token") {
    CHECK(prefill_energy_per_token(profile("dsr1-qwen-1.5b"), 128) == doctest::Approx(0.002148).epsilon(1e-3));
    CHECK(prefill_energy_per_token(profile("dsr1-qwen-1.5b"), 1000000) == doctest::Approx(0.000923).epsilon(1e-12));
    CHECK(prefill_energy_per_token(profile("dsr1-llama-8b"), 2048) == doctest::Approx(0.020521).epsilon(1e-4));
    // 8B switches from decay to log above 640 tokens.
    const double a = 0.15871 * std::exp(-0.03240 * 640) + 0.00553;
    CHECK(prefill_energy_per_token(profile("dsr1-llama-8b"), 640) == doctest::Approx(a));
    CHECK(prefill_energy_per_token(profile("dsr1-llama-8b"), 641) ==
          doctest::Approx(0.01233 * std::log(641.0) - 0.07349));
    CHECK(code_of([] {
              ModelProfile p = profile("dsr1-qwen-14b");
              p.prefill_energy.reset();
              (void)prefill_energy_per_token(p, 1);
          }) == ErrorCode::missing_coefficient);
}

TEST_CASE("decode_power") {
    const auto& p = profile("dsr1-qwen-1.5b");
    CHECK(decode_power(p, 32) == 5.9);
    CHECK(decode_power(p, 63) == 5.9);
    CHECK(decode_power(p, 64) == doctest::Approx(0.756538 * std::log(64.0) + 3.213711));
    CHECK(decode_power(p, 512) == doctest::Approx(7.933).epsilon(1e-4));
    CHECK(code_of([&] { (void)decode_power(p, 0); }) == ErrorCode::domain_error);

    double prev = decode_power(p, 64);
    for (Tokens o = 65; o <= 4096; ++o) {
        double cur = decode_power(p, o);
        REQUIRE(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("decode_power warns above the platform cap") {
    Warnings w;
    double watts = decode_power(profile("dsr1-qwen-14b"), 512, &w);
    CHECK(watts > 100.0);
    REQUIRE(w.size() == 1);
    CHECK(w[0].find("ImplausibleWatts") == 0);

    w.clear();
    (void)decode_power(profile("dsr1-qwen-14b"), 512, &w, 200.0);
    CHECK(w.empty());
    (void)decode_power(profile("dsr1-qwen-1.5b"), 512, &w);
    CHECK(w.empty());
}

TEST_CASE("decode_energy") {
    const auto& p = profile("dsr1-qwen-1.5b");
    CHECK(decode_energy(p, 512, 32) == doctest::Approx(4.5163).epsilon(1e-4));
    CHECK(decode_latency(p, 512, 32) == doctest::Approx(0.765468).epsilon(1e-6));
    CHECK(decode_energy(p, 512, 0) == 0.0);
    for (const char* id : {"dsr1-qwen-1.5b", "dsr1-llama-8b", "dsr1-qwen-14b"}) {
        CHECK(decode_energy(profile(id), 512, 64) > decode_energy(profile(id), 512, 32));
    }
}

TEST_CASE("decode_energy in the constant regime is floor times latency") {
    for (const char* id : {"dsr1-qwen-1.5b", "dsr1-llama-8b", "dsr1-qwen-14b"}) {
        for (Tokens o : {1, 10, 63}) {
            CHECK(std::abs(decode_energy(profile(id), 300, o) - 5.9 * decode_latency(profile(id), 300, o)) <= 1e-9);
        }
    }
}

TEST_CASE("decode_energy equals the definitional sum and splits additively") {
    std::mt19937_64 rng(11);
    for (const char* id : {"dsr1-qwen-1.5b", "dsr1-llama-8b", "dsr1-qwen-14b"}) {
        const auto& p = profile(id);
        for (int k = 0; k < 20; ++k) {
            Tokens i = std::uniform_int_distribution<Tokens>(1, 4096)(rng);
            Tokens o = std::uniform_int_distribution<Tokens>(0, 2048)(rng);
            CHECK(decode_energy(p, i, o) == doctest::Approx(ref_decode_energy(p, i, o)).epsilon(1e-12));

            Tokens o1 = std::uniform_int_distribution<Tokens>(0, o)(rng);
            double tail = 0.0;
            for (Tokens j = o1; j < o; ++j) tail += decode_power(p, j + 1) * tbt(p, i + j);
            CHECK(decode_energy(p, i, o) == doctest::Approx(decode_energy(p, i, o1) + tail).epsilon(1e-12));
        }
    }
}

TEST_CASE("decode_energy reports one implausible-watts warning") {
    Warnings w;
    (void)decode_energy(profile("dsr1-qwen-14b"), 512, 256, &w);
    CHECK(w.size() == 1);
}

TEST_CASE("total_energy") {
    const auto& p = profile("dsr1-qwen-1.5b");
    CHECK(total_energy(p, 128, 0) == doctest::Approx(0.275).epsilon(2e-3));
    CHECK(total_energy(p, 128, 0) == prefill_energy_per_token(p, 128) * 128.0);
    const double pre = prefill_energy_per_token(p, 700) * 700.0;
    CHECK(total_energy(p, 700, 90) == pre + decode_energy(p, 700, 90));

    auto mj = with_prefill_unit(EnergyUnit::millijoules_per_token);
    CHECK(total_energy(mj, 128, 0) == doctest::Approx(total_energy(p, 128, 0) * 1e-3));

    CHECK(code_of([] { (void)total_energy(with_prefill_unit(EnergyUnit::fitted), 128, 1); }) ==
          ErrorCode::unit_undeclared);
    CHECK(code_of([] { (void)total_energy(with_prefill_unit(EnergyUnit::undeclared), 128, 1); }) ==
          ErrorCode::unit_undeclared);
    CHECK(code_of([] { (void)total_energy(profile("dsr1-qwen-1.5b-w4"), 128, 1); }) ==
          ErrorCode::missing_coefficient);
}

TEST_CASE("prefill energy of the 1.5B model agrees with power times latency at 128 tokens") {
    const auto& p = profile("dsr1-qwen-1.5b");
    const double e = prefill_energy_per_token(p, 128);
    const double pl = prefill_power(p, 128) * prefill_latency(p, 128) / 128.0;
    CHECK(std::abs(e - pl) / e <= 0.10);
    CHECK(pl == doctest::Approx(0.002151).epsilon(1e-3));
}

TEST_CASE("cost_per_million_tokens") {
    auto single = cost_per_million_tokens({195624, 4358.0, 0.0317}, {});
    CHECK(single.total == doctest::Approx(0.3028).epsilon(1e-3));
    CHECK(single.energy_cost == doctest::Approx(0.0243).epsilon(1e-2));
    CHECK(single.hardware_cost == doctest::Approx(0.2785).epsilon(1e-3));
    CHECK(single.total == single.energy_cost + single.hardware_cost);

    auto batched = cost_per_million_tokens({195624, 398.0, 0.003}, {0.15, 0.045});
    CHECK(batched.total == doctest::Approx(0.0277).epsilon(1e-2));
    CHECK(batched.energy_cost == doctest::Approx(0.0023).epsilon(2e-2));
    CHECK(batched.hardware_cost == doctest::Approx(0.0254).epsilon(1e-2));

    CHECK(cost_per_million_tokens({1000, 10.0, 1.0}, {0.0, 0.0}).total == 0.0);
}

TEST_CASE("cost components are linear in their prices") {
    UsageSample u{195624, 4358.0, 0.0317};
    auto base = cost_per_million_tokens(u, {0.15, 0.045});
    auto twice = cost_per_million_tokens(u, {0.30, 0.045});
    CHECK(twice.energy_cost == 2.0 * base.energy_cost);
    CHECK(twice.hardware_cost == base.hardware_cost);
    auto hw = cost_per_million_tokens(u, {0.15, 0.09});
    CHECK(hw.hardware_cost == 2.0 * base.hardware_cost);
}

TEST_CASE("cost_per_million_tokens errors") {
    CHECK(code_of([] { (void)cost_per_million_tokens({0, 1.0, 1.0}, {}); }) == ErrorCode::domain_error);
    CHECK(code_of([] { (void)cost_per_million_tokens({10, 0.0, 1.0}, {}); }) == ErrorCode::domain_error);
    CHECK(code_of([] { (void)cost_per_million_tokens({10, 1.0, -1.0}, {}); }) == ErrorCode::domain_error);
    CHECK(code_of([] { (void)cost_per_million_tokens({10, 1.0, 1.0}, {-0.1, 0.0}); }) == ErrorCode::domain_error);
}
