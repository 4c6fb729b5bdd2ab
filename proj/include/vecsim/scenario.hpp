#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vecsim/errors.hpp"

namespace vecsim {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// All physical and algorithmic constants of the scenario: a multi-lane road
// segment served by one roadside base station, vehicles that traverse it at
// lane-specific speeds, and the radio/compute parameters of the vehicular
// users.  Defaults reproduce the reference experiment setup.
struct ScenarioConfig {
    int num_antennas = 4;                 // receive antennas at the base station
    int num_lanes = 3;                    // one-way lanes
    double lane_width = 5.0;              // meters
    double first_lane_offset = 5.0;       // meters from base station to nearest lane
    double bs_height = 10.0;              // meters (antenna height)
    double coverage = 500.0;              // meters of road covered, centred on the BS
    std::vector<double> lane_velocities = {20.0, 25.0, 30.0};  // m/s per lane
    double slot_duration = 0.02;          // seconds
    double bandwidth = 1e6;               // hertz
    double noise_power = 1e-9;            // watts at the receiver
    double ref_gain = 1e-3;               // path gain at 1 m (-30 dB), linear
    double path_loss_exponent = 2.0;
    double wavelength = 7.0;              // meters (carrier wavelength)
    double comp_intensity = 500.0;        // CPU cycles per bit
    double switched_capacitance = 1e-28;  // watts * second^3
    double max_offload_power = 1.0;       // watts
    double max_local_power = 1.0;         // watts
    double arrival_rate = 3e6;            // bits/second of task arrivals
    double safety_time = 4.0;             // seconds of headway between vehicles
    std::int64_t buffer_capacity = 0;     // bits; 0 means "use default_buffer_capacity()"
    std::array<double, 2> reward_weights = {0.9, 0.1};  // (power weight, backlog weight)
    std::uint64_t rng_seed = 1;

    // Default task-buffer size: 40 mean slot-arrivals (2.4 Mbit at defaults).
    std::int64_t default_buffer_capacity() const {
        return static_cast<std::int64_t>(std::llround(40.0 * arrival_rate * slot_duration));
    }
    std::int64_t effective_buffer_capacity() const {
        return buffer_capacity > 0 ? buffer_capacity : default_buffer_capacity();
    }
};

// Throws ConfigError listing every violated constraint.
void validate(const ScenarioConfig& cfg);

struct VehiclePose {
    int lane = 1;            // 1-based lane index
    double distance = 0.0;   // longitudinal position in [-coverage/2, coverage/2], 0 at the BS
    double lateral = 0.0;    // perpendicular distance from the BS line
    double velocity = 0.0;   // m/s, constant within a lane
};

// Perpendicular distance between the base station and lane j.
double lateral_offset(int lane, const ScenarioConfig& cfg);

// Pose of a vehicle on `lane` at longitudinal position `distance`.
VehiclePose make_pose(const ScenarioConfig& cfg, int lane, double distance);

// Position of the vehicle in BS-centred coordinates
// (x longitudinal, y lateral, z height).
inline Vec3 position(const VehiclePose& pose) { return {pose.distance, pose.lateral, 0.0}; }

// One slot of constant-speed motion along the lane.
VehiclePose advance(const VehiclePose& pose, double slot_duration);

// Maximum number of simultaneously admitted vehicles given the safety
// headway on every lane.
int max_vehicles(const ScenarioConfig& cfg);

// Number of decision slots a vehicle on lane j spends inside the coverage.
int slots_on_lane(const ScenarioConfig& cfg, int lane);

// Base-station antenna position.
inline Vec3 bs_position(const ScenarioConfig& cfg) { return {0.0, 0.0, cfg.bs_height}; }

} // namespace vecsim
