#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "vecsim/compute.hpp"
#include "vecsim/errors.hpp"
#include "vecsim/rng.hpp"

#include "../support/oracles.hpp"

using vecsim::BufferState;
using vecsim::Rng;
using vecsim::ScenarioConfig;

TEST_CASE("budget CPU frequency is the cube root of power over capacitance") {
    ScenarioConfig cfg;
    // cbrt(1 / 1e-28), frozen reference value.
    CHECK(vecsim::max_cpu_frequency(cfg) ==
          doctest::Approx(2154434690.03188372).epsilon(1e-12));
}

TEST_CASE("local execution converts power to bits through DVFS") {
    ScenarioConfig cfg;
    CHECK(vecsim::local_bits(0.0, cfg) == 0.0);
    // Full power: tau0 * f_max / L, frozen reference value.
    CHECK(vecsim::local_bits(1.0, cfg) == doctest::Approx(86177.3876012753489).epsilon(1e-12));
    // Cube-root scaling: an eighth of the power gives half the bits.
    CHECK(vecsim::local_bits(0.125, cfg) ==
          doctest::Approx(0.5 * vecsim::local_bits(1.0, cfg)).epsilon(1e-12));
    // The DVFS frequency is capped at the budget frequency, so overdriving
    // beyond the budget power gains nothing.
    CHECK(vecsim::local_bits(8.0, cfg) == doctest::Approx(vecsim::local_bits(1.0, cfg)));
    CHECK_THROWS_AS(vecsim::local_bits(-0.1, cfg), vecsim::ContractViolation);
}

TEST_CASE("offload bits follow the slot-rate-bandwidth product") {
    ScenarioConfig cfg;
    CHECK(vecsim::offload_bits(0.0, cfg) == 0.0);
    // log2(1+3) = 2 -> 0.02 * 1e6 * 2.
    CHECK(vecsim::offload_bits(3.0, cfg) == doctest::Approx(40000.0).epsilon(1e-12));
    // Frozen reference value at a strong-channel SINR.
    CHECK(vecsim::offload_bits(4e9, cfg) == doctest::Approx(637947.057086938698).epsilon(1e-9));
    // Monotone in SINR.
    double prev = -1.0;
    for (double snr : {0.0, 0.5, 1.0, 10.0, 1e3, 1e6, 1e9}) {
        const double bits = vecsim::offload_bits(snr, cfg);
        CHECK(bits > prev);
        prev = bits;
    }
    CHECK_THROWS_AS(vecsim::offload_bits(-1.0, cfg), vecsim::ContractViolation);
}

TEST_CASE("buffer update drains, fills and reports overflow") {
    // Plenty of service: backlog fully drained, arrivals remain.
    auto up = vecsim::buffer_update({100000, 2400000}, 90000, 60000, 60000);
    CHECK(up.state.backlog == 60000);
    CHECK(up.served_local + up.served_offload == 100000);
    CHECK(up.overflow == 0);

    // No service, no arrivals: unchanged.
    up = vecsim::buffer_update({123456, 2400000}, 0, 0, 0);
    CHECK(up.state.backlog == 123456);
    CHECK(up.overflow == 0);

    // Arrivals beyond capacity are dropped.
    up = vecsim::buffer_update({2350000, 2400000}, 0, 0, 100000);
    CHECK(up.state.backlog == 2400000);
    CHECK(up.overflow == 50000);
}

TEST_CASE("scarce backlog is split in proportion to path capacities") {
    // capacities 3 and 2, backlog 4: local serves floor(3*4/5) = 2, offload 2.
    const auto up = vecsim::buffer_update({4, 100}, 3, 2, 0);
    CHECK(up.served_local == 2);
    CHECK(up.served_offload == 2);
    CHECK(up.state.backlog == 0);
    // Each path stays within its own capacity.
    CHECK(up.served_local <= 3);
    CHECK(up.served_offload <= 2);
}

TEST_CASE("bit conservation holds exactly over randomized slots") {
    Rng rng(606);
    BufferState state{0, 2400000};
    for (int step = 0; step < 100000; ++step) {
        const std::int64_t local = static_cast<std::int64_t>(rng.uniform_index(200001));
        const std::int64_t offload = static_cast<std::int64_t>(rng.uniform_index(200001));
        const std::int64_t arrivals = rng.poisson(60000.0);
        const auto up = vecsim::buffer_update(state, local, offload, arrivals);
        const std::int64_t delta = up.state.backlog - state.backlog;
        REQUIRE(delta == arrivals - up.served_local - up.served_offload - up.overflow);
        REQUIRE(up.served_local <= local);
        REQUIRE(up.served_offload <= offload);
        REQUIRE(up.served_local + up.served_offload <= state.backlog);
        REQUIRE(up.state.backlog >= 0);
        REQUIRE(up.state.backlog <= state.capacity);
        REQUIRE(up.overflow >= 0);
        state = up.state;
    }
}

TEST_CASE("arrival sampling hits the configured mean rate") {
    ScenarioConfig cfg;
    Rng rng(707);
    std::vector<double> xs(100000);
    for (double& x : xs) x = static_cast<double>(vecsim::sample_arrivals(cfg, rng));
    // Mean lambda * tau0 = 60000 bits within 1%.
    CHECK(oracles::mean(xs) == doctest::Approx(60000.0).epsilon(0.01));
}
