#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "vecsim/channel.hpp"
#include "vecsim/compute.hpp"
#include "vecsim/rng.hpp"
#include "vecsim/scenario.hpp"

namespace vecsim {

// Local state visible to the vehicle at decision time.  The SINR component
// is delayed by one slot: the detector is computed at the base station and
// its result only reaches the vehicle with the next downlink message.
struct Observation {
    double buffer_bits = 0.0;
    double snr_delayed = 0.0;
    double distance = 0.0;
};

struct Action {
    double offload_power = 0.0;  // watts on the uplink
    double local_power = 0.0;    // watts into the local CPU
};

struct StepDiagnostics {
    int slot = 0;                      // 1-based index of the slot just executed
    double decision_distance = 0.0;    // vehicle position when the action applied
    double offload_power = 0.0;        // clipped powers actually applied
    double local_power = 0.0;
    double snr_used = 0.0;             // SINR that priced the uplink: this slot's
                                       // power over the fed-back detector gain
    double snr_next = 0.0;             // SINR computed at slot end (next feedback)
    std::int64_t served_local = 0;
    std::int64_t served_offload = 0;
    std::int64_t arrivals = 0;
    std::int64_t overflow = 0;
    int active_vehicles = 0;
};

struct StepOutcome {
    Observation next_obs;
    double reward = 0.0;
    bool done = false;
    StepDiagnostics diagnostics;
};

// Per-slot channel telemetry for the optional channel trace.
struct ChannelTraceRow {
    int slot = 0;
    std::vector<double> g_norm_sq;   // per active vehicle
    std::vector<double> correlation; // per active vehicle
    double target_sinr = 0.0;
};

// Sum of rewards weighted by discount^(t-1).
double discounted_return(std::span<const double> rewards, double discount);

// One target vehicle crossing the coverage of a single base station while
// interfering vehicles enter mid-episode.  Episodes are the coverage
// traversal of the target's lane; all randomness comes from two named
// sub-streams (arrivals, fading) derived from the seed, so runs with equal
// (config, seed) are identical.
class Environment {
public:
    Environment(ScenarioConfig cfg, int target_lane, std::uint64_t seed);

    Observation reset();
    StepOutcome step(const Action& action);

    // (backlog/capacity, log2(1+snr)/running-max, distance/(coverage/2)).
    // The running maximum persists across episodes of this instance.
    std::array<double, 3> normalize_observation(const Observation& obs);

    int episode_length() const { return episode_length_; }
    int slot() const { return slot_count_; }
    bool done() const { return done_; }
    int active_vehicles() const { return static_cast<int>(fading_.fading.size()); }
    const ScenarioConfig& config() const { return cfg_; }
    int target_lane() const { return target_lane_; }
    const ChannelTraceRow& last_channel() const { return last_channel_; }

private:
    void rebuild_channel(double target_offload_power, bool evolve);

    ScenarioConfig cfg_;
    int target_lane_;
    int episode_length_;
    Rng arrivals_rng_;
    Rng fading_rng_;

    VehiclePose target_pose_;
    std::vector<VehiclePose> interferer_poses_;
    SmallScaleState fading_;   // entry 0 is the target
    BufferState buffer_;
    double snr_feedback_ = 0.0;  // SINR carried by the latest observation
    double g_feedback_ = 0.0;    // detector noise gain behind that feedback
    double max_log_snr_ = 0.0;   // running normalizer for log2(1+snr)
    int slot_count_ = 0;
    bool done_ = true;
    bool interferers_spawned_ = false;
    ChannelTraceRow last_channel_;
};

} // namespace vecsim
