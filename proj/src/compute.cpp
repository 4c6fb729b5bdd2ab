#include "vecsim/compute.hpp"

#include <algorithm>
#include <cmath>

#include "vecsim/errors.hpp"

namespace vecsim {

double max_cpu_frequency(const ScenarioConfig& cfg) {
    return std::cbrt(cfg.max_local_power / cfg.switched_capacitance);
}

double local_bits(double local_power, const ScenarioConfig& cfg) {
    if (local_power < 0.0) throw ContractViolation("local_bits: negative power");
    const double freq =
        std::min(std::cbrt(local_power / cfg.switched_capacitance), max_cpu_frequency(cfg));
    return cfg.slot_duration * freq / cfg.comp_intensity;
}

double offload_bits(double snr, const ScenarioConfig& cfg) {
    if (snr < 0.0) throw ContractViolation("offload_bits: negative SINR");
    return cfg.slot_duration * cfg.bandwidth * std::log2(1.0 + snr);
}

BufferUpdate buffer_update(const BufferState& prev, std::int64_t local_capacity,
                           std::int64_t offload_capacity, std::int64_t arrivals) {
    if (prev.backlog < 0 || prev.backlog > prev.capacity)
        throw ContractViolation("buffer_update: backlog outside [0, capacity]");
    if (local_capacity < 0 || offload_capacity < 0 || arrivals < 0)
        throw ContractViolation("buffer_update: negative throughput input");

    const std::int64_t total_capacity = local_capacity + offload_capacity;
    const std::int64_t served = std::min(total_capacity, prev.backlog);
    BufferUpdate out;
    if (served > 0) {
        // Proportional split, floored towards the local path; the offload
        // share ceil(served*offload/total) never exceeds offload_capacity.
        out.served_local = local_capacity * served / total_capacity;
        out.served_offload = served - out.served_local;
    }
    const std::int64_t after_service = prev.backlog - served + arrivals;
    out.overflow = std::max<std::int64_t>(0, after_service - prev.capacity);
    out.state.backlog = after_service - out.overflow;
    out.state.capacity = prev.capacity;
    return out;
}

std::int64_t sample_arrivals(const ScenarioConfig& cfg, Rng& rng) {
    return rng.poisson(cfg.arrival_rate * cfg.slot_duration);
}

} // namespace vecsim
