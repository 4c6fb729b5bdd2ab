#include "vecsim/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "vecsim/compute.hpp"

namespace vecsim {

Action gd_local_action(const Observation& obs, const ChannelGainEstimate& estimate,
                       const ScenarioConfig& cfg) {
    Action a;
    a.local_power = cfg.max_local_power;

    const double remaining = std::max(0.0, obs.buffer_bits - local_bits(cfg.max_local_power, cfg));
    if (remaining <= 0.0) {
        a.offload_power = 0.0;
    } else if (!estimate.valid || estimate.snr <= 0.0) {
        a.offload_power = cfg.max_offload_power;
    } else {
        // Invert the rate law: the SINR that clears `remaining` in one slot,
        // then the power that reaches it under the estimated channel
        // (SINR is linear in power, so p = snr_needed * p_hat / snr_hat).
        const double snr_needed =
            std::exp2(remaining / (cfg.slot_duration * cfg.bandwidth)) - 1.0;
        const double power = snr_needed * estimate.offload_power / estimate.snr;
        a.offload_power = std::clamp(power, 0.0, cfg.max_offload_power);
    }
    return a;
}

Action gd_offload_action(const Observation& obs, const ChannelGainEstimate& estimate,
                         const ScenarioConfig& cfg) {
    Action a;
    a.offload_power = cfg.max_offload_power;

    if (!estimate.valid || estimate.snr <= 0.0 || estimate.offload_power <= 0.0) {
        a.local_power = cfg.max_local_power;
        return a;
    }
    const double snr_at_max =
        estimate.snr * cfg.max_offload_power / estimate.offload_power;
    const double remaining = std::max(0.0, obs.buffer_bits - offload_bits(snr_at_max, cfg));
    if (remaining <= 0.0) {
        a.local_power = 0.0;
    } else {
        // CPU frequency that clears `remaining` in one slot, mapped back to
        // power through the cubic frequency-power law.
        const double freq_needed = remaining * cfg.comp_intensity / cfg.slot_duration;
        const double power = cfg.switched_capacitance * freq_needed * freq_needed * freq_needed;
        a.local_power = std::clamp(power, 0.0, cfg.max_local_power);
    }
    return a;
}

namespace detail {

void GreedyPolicy::observe(const Action& taken, const StepOutcome& outcome) {
    (void)taken;
    const double used = outcome.diagnostics.offload_power;
    if (used > 0.0) {
        estimate_.snr = outcome.next_obs.snr_delayed;
        estimate_.offload_power = used;
        estimate_.valid = estimate_.snr > 0.0;
    } else {
        estimate_.valid = false;
    }
}

} // namespace detail

Action GdLocalPolicy::act(const Observation& obs, Environment& env) {
    (void)env;
    return gd_local_action(obs, estimate_, cfg_);
}

Action GdOffloadPolicy::act(const Observation& obs, Environment& env) {
    (void)env;
    return gd_offload_action(obs, estimate_, cfg_);
}

} // namespace vecsim
