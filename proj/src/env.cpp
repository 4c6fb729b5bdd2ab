#include "vecsim/env.hpp"

#include <algorithm>
#include <cmath>

#include "vecsim/errors.hpp"

namespace vecsim {

double discounted_return(std::span<const double> rewards, double discount) {
    if (discount < 0.0 || discount > 1.0)
        throw ContractViolation("discounted_return: discount outside [0, 1]");
    double total = 0.0;
    double weight = 1.0;
    for (double r : rewards) {
        total += weight * r;
        weight *= discount;
    }
    return total;
}

Environment::Environment(ScenarioConfig cfg, int target_lane, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      target_lane_(target_lane),
      episode_length_(0),
      arrivals_rng_(derive_stream_seed(seed, StreamTag::arrivals)),
      fading_rng_(derive_stream_seed(seed, StreamTag::fading)) {
    validate(cfg_);
    if (target_lane_ < 1 || target_lane_ > cfg_.num_lanes)
        throw ConfigError("target lane " + std::to_string(target_lane_) + " outside [1, " +
                          std::to_string(cfg_.num_lanes) + "]");
    episode_length_ = slots_on_lane(cfg_, target_lane_);
}

Observation Environment::reset() {
    target_pose_ = make_pose(cfg_, target_lane_, -cfg_.coverage / 2.0);
    interferer_poses_.clear();
    interferers_spawned_ = false;
    slot_count_ = 0;
    done_ = false;

    const std::int64_t capacity = cfg_.effective_buffer_capacity();
    buffer_ = BufferState{capacity / 2, capacity};

    fading_.fading.assign(1, init_small_scale(cfg_.num_antennas, fading_rng_));
    fading_.correlation.assign(1, 1.0);

    // Initial SINR feedback comes from a probe transmission at full offload
    // power through the freshly drawn channel (no fading step yet).
    rebuild_channel(cfg_.max_offload_power, /*evolve=*/false);

    Observation obs;
    obs.buffer_bits = static_cast<double>(buffer_.backlog);
    obs.snr_delayed = snr_feedback_;
    obs.distance = target_pose_.distance;
    return obs;
}

StepOutcome Environment::step(const Action& action) {
    if (done_) throw ContractViolation("step: episode already finished");

    StepOutcome out;
    StepDiagnostics& diag = out.diagnostics;

    // 1. clip the requested powers to their boxes
    const double p_o = std::clamp(action.offload_power, 0.0, cfg_.max_offload_power);
    const double p_l = std::clamp(action.local_power, 0.0, cfg_.max_local_power);
    diag.offload_power = p_o;
    diag.local_power = p_l;
    diag.decision_distance = target_pose_.distance;
    diag.slot = slot_count_ + 1;

    // 2.-4. serve the buffer: local execution at the chosen CPU power and
    // offloading at the rate of the chosen uplink power over the detector
    // gain known from the one-slot-delayed feedback (the current slot's
    // detector is only computed at the base station after transmission),
    // then new arrivals
    const double snr_priced = sinr(p_o, g_feedback_, cfg_.noise_power);
    diag.snr_used = snr_priced;
    const auto local_cap = static_cast<std::int64_t>(std::floor(local_bits(p_l, cfg_)));
    const auto offload_cap =
        static_cast<std::int64_t>(std::floor(offload_bits(snr_priced, cfg_)));
    const std::int64_t arrivals = sample_arrivals(cfg_, arrivals_rng_);
    const BufferUpdate bu = buffer_update(buffer_, local_cap, offload_cap, arrivals);
    buffer_ = bu.state;
    diag.served_local = bu.served_local;
    diag.served_offload = bu.served_offload;
    diag.arrivals = arrivals;
    diag.overflow = bu.overflow;

    // 5. cost of the slot: transmit+compute power and the remaining backlog
    // (in megabits, to keep both terms at comparable magnitude)
    const double backlog_megabits = static_cast<double>(buffer_.backlog) / 1e6;
    out.reward = -(cfg_.reward_weights[0] * (p_o + p_l) +
                   cfg_.reward_weights[1] * backlog_megabits);

    // 6. constant-speed motion of every vehicle
    target_pose_ = advance(target_pose_, cfg_.slot_duration);
    for (auto& pose : interferer_poses_) pose = advance(pose, cfg_.slot_duration);

    // 7. interferers enter the coverage when the target passes the BS
    if (!interferers_spawned_ && target_pose_.distance >= 0.0) {
        for (int lane = 1; lane <= cfg_.num_lanes; ++lane) {
            interferer_poses_.push_back(make_pose(cfg_, lane, -cfg_.coverage / 2.0));
            fading_.fading.push_back(init_small_scale(cfg_.num_antennas, fading_rng_));
            fading_.correlation.push_back(1.0);
        }
        interferers_spawned_ = true;
    }

    // 8. fading step and fresh ZF detector; the resulting SINR becomes the
    // feedback carried by the next observation
    rebuild_channel(p_o, /*evolve=*/true);
    diag.snr_next = snr_feedback_;
    diag.active_vehicles = active_vehicles();

    // 9. episode ends after the coverage traversal
    ++slot_count_;
    done_ = slot_count_ >= episode_length_;
    out.done = done_;

    out.next_obs.buffer_bits = static_cast<double>(buffer_.backlog);
    out.next_obs.snr_delayed = snr_feedback_;
    out.next_obs.distance = target_pose_.distance;
    return out;
}

void Environment::rebuild_channel(double target_offload_power, bool evolve) {
    const Vec3 bs = bs_position(cfg_);

    // Fading correlation follows each vehicle's current pose.
    fading_.correlation[0] =
        doppler_correlation(target_pose_, bs, cfg_.wavelength, cfg_.slot_duration);
    for (std::size_t i = 0; i < interferer_poses_.size(); ++i)
        fading_.correlation[i + 1] =
            doppler_correlation(interferer_poses_[i], bs, cfg_.wavelength, cfg_.slot_duration);

    std::vector<double> losses;
    losses.reserve(fading_.fading.size());
    losses.push_back(path_loss(position(target_pose_), bs, cfg_.ref_gain,
                               cfg_.path_loss_exponent));
    for (const auto& pose : interferer_poses_)
        losses.push_back(path_loss(position(pose), bs, cfg_.ref_gain, cfg_.path_loss_exponent));

    // Evolve the fading and build the detector; on the (probability-zero)
    // singular draw, rewind and redraw the innovations.
    const std::vector<std::vector<cxd>> before = fading_.fading;
    for (int attempt = 0;; ++attempt) {
        try {
            if (evolve) evolve_small_scale(fading_, fading_rng_);
            const ComplexMatrix h = compose_channel(fading_, losses);
            const ZfResult zf = zf_detector(h);
            g_feedback_ = zf.g_norm_sq[0];
            snr_feedback_ = sinr(target_offload_power, g_feedback_, cfg_.noise_power);
            last_channel_.slot = slot_count_;
            last_channel_.g_norm_sq = zf.g_norm_sq;
            last_channel_.correlation = fading_.correlation;
            last_channel_.target_sinr = snr_feedback_;
            return;
        } catch (const SingularChannelError&) {
            if (attempt >= 64) throw;
            fading_.fading = before;
            if (!evolve)
                for (auto& h : fading_.fading) h = init_small_scale(cfg_.num_antennas, fading_rng_);
        }
    }
}

std::array<double, 3> Environment::normalize_observation(const Observation& obs) {
    const double capacity = static_cast<double>(cfg_.effective_buffer_capacity());
    const double log_snr = std::log2(1.0 + obs.snr_delayed);
    max_log_snr_ = std::max(max_log_snr_, log_snr);
    return {obs.buffer_bits / capacity,
            max_log_snr_ > 0.0 ? log_snr / max_log_snr_ : 0.0,
            obs.distance / (cfg_.coverage / 2.0)};
}

} // namespace vecsim
