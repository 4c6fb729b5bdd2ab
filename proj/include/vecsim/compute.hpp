#pragma once

#include <cstdint>

#include "vecsim/rng.hpp"
#include "vecsim/scenario.hpp"

namespace vecsim {

struct BufferState {
    std::int64_t backlog = 0;   // bits waiting in the task queue
    std::int64_t capacity = 0;  // bits the queue can hold
};

struct SlotThroughput {
    std::int64_t d_local = 0;    // bits executed on the vehicle CPU
    std::int64_t d_offload = 0;  // bits offloaded over the uplink
    std::int64_t arrivals = 0;   // bits generated this slot
};

// Highest CPU frequency reachable within the local power budget
// (frequency scaling: p = switched_capacitance * f^3).
double max_cpu_frequency(const ScenarioConfig& cfg);

// Bits the local CPU can execute in one slot at local power p_l: the DVFS
// frequency cbrt(p_l / switched_capacitance), capped at the budget frequency,
// times slot_duration / comp_intensity.
double local_bits(double local_power, const ScenarioConfig& cfg);

// Bits the uplink can carry in one slot at post-detection SINR `snr`:
// slot_duration * bandwidth * log2(1 + snr).
double offload_bits(double snr, const ScenarioConfig& cfg);

struct BufferUpdate {
    BufferState state;                 // queue after the slot
    std::int64_t served_local = 0;     // bits drained by local execution
    std::int64_t served_offload = 0;   // bits drained by offloading
    std::int64_t overflow = 0;         // arriving bits dropped at capacity
};

// One slot of queue dynamics.  Total departures are capped at the backlog
// held at the start of the slot; when both paths together exceed it, service
// is split in proportion to each path's capacity.  Arrivals beyond capacity
// are dropped and reported.  All-integer arithmetic, so
// backlog(t) - backlog(t-1) = arrivals - served - overflow holds exactly.
BufferUpdate buffer_update(const BufferState& prev, std::int64_t local_capacity,
                           std::int64_t offload_capacity, std::int64_t arrivals);

// Poisson bit arrivals for one slot, mean arrival_rate * slot_duration.
std::int64_t sample_arrivals(const ScenarioConfig& cfg, Rng& rng);

} // namespace vecsim
