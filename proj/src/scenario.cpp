#include "vecsim/scenario.hpp"

#include <sstream>

namespace vecsim {

namespace {

// Guard against representation error before flooring an exact quotient
// (e.g. 500/(25*0.02) evaluates to 999.9999... in binary).
int floor_count(double x) {
    return static_cast<int>(std::floor(x + 1e-9));
}

} // namespace

void validate(const ScenarioConfig& cfg) {
    std::ostringstream bad;
    auto require = [&bad](bool ok, const char* msg) {
        if (!ok) bad << (bad.tellp() > 0 ? "; " : "") << msg;
    };
    require(cfg.num_antennas >= 1, "num_antennas must be >= 1");
    require(cfg.num_lanes >= 1, "num_lanes must be >= 1");
    require(cfg.num_lanes + 1 <= cfg.num_antennas,
            "zero-forcing needs num_antennas >= num_lanes + 1 (target plus one vehicle per lane)");
    require(cfg.lane_width > 0.0, "lane_width must be positive");
    require(cfg.first_lane_offset > 0.0, "first_lane_offset must be positive");
    require(cfg.bs_height > 0.0, "bs_height must be positive");
    require(cfg.coverage > 0.0, "coverage must be positive");
    require(static_cast<int>(cfg.lane_velocities.size()) == cfg.num_lanes,
            "lane_velocities must list one speed per lane");
    for (double v : cfg.lane_velocities) {
        require(v > 0.0, "lane velocities must be positive");
        if (v <= 0.0) break;
    }
    require(cfg.slot_duration > 0.0, "slot_duration must be positive");
    require(cfg.bandwidth > 0.0, "bandwidth must be positive");
    require(cfg.noise_power > 0.0, "noise_power must be positive");
    require(cfg.ref_gain > 0.0, "ref_gain must be positive");
    require(cfg.path_loss_exponent >= 1.0, "path_loss_exponent must be >= 1");
    require(cfg.wavelength > 0.0, "wavelength must be positive");
    require(cfg.comp_intensity > 0.0, "comp_intensity must be positive");
    require(cfg.switched_capacitance > 0.0, "switched_capacitance must be positive");
    require(cfg.max_offload_power > 0.0, "max_offload_power must be positive");
    require(cfg.max_local_power > 0.0, "max_local_power must be positive");
    require(cfg.arrival_rate > 0.0, "arrival_rate must be positive");
    require(cfg.safety_time > 0.0, "safety_time must be positive");
    require(cfg.buffer_capacity >= 0, "buffer_capacity must be non-negative (0 = default)");
    require(cfg.reward_weights[0] >= 0.0 && cfg.reward_weights[1] >= 0.0,
            "reward_weights must be non-negative");
    if (bad.tellp() > 0) throw ConfigError("invalid scenario: " + bad.str());
}

double lateral_offset(int lane, const ScenarioConfig& cfg) {
    if (lane < 1 || lane > cfg.num_lanes) {
        throw ConfigError("lane index " + std::to_string(lane) + " outside [1, " +
                          std::to_string(cfg.num_lanes) + "]");
    }
    return (lane - 1) * cfg.lane_width + cfg.first_lane_offset;
}

VehiclePose make_pose(const ScenarioConfig& cfg, int lane, double distance) {
    VehiclePose pose;
    pose.lane = lane;
    pose.distance = distance;
    pose.lateral = lateral_offset(lane, cfg);
    pose.velocity = cfg.lane_velocities.at(static_cast<std::size_t>(lane - 1));
    return pose;
}

VehiclePose advance(const VehiclePose& pose, double slot_duration) {
    VehiclePose next = pose;
    next.distance += pose.velocity * slot_duration;
    return next;
}

int max_vehicles(const ScenarioConfig& cfg) {
    int total = 0;
    for (double v : cfg.lane_velocities) {
        total += floor_count(cfg.coverage / (cfg.safety_time * v));
    }
    return total;
}

int slots_on_lane(const ScenarioConfig& cfg, int lane) {
    if (lane < 1 || lane > cfg.num_lanes) {
        throw ConfigError("lane index " + std::to_string(lane) + " outside [1, " +
                          std::to_string(cfg.num_lanes) + "]");
    }
    const double v = cfg.lane_velocities.at(static_cast<std::size_t>(lane - 1));
    return floor_count(cfg.coverage / (v * cfg.slot_duration));
}

} // namespace vecsim
