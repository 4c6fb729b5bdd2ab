#pragma once

#include "vecsim/policy.hpp"
#include "vecsim/scenario.hpp"

namespace vecsim {

// What a vehicle can infer about its uplink from the last slot's SINR
// feedback: the pair (power transmitted, SINR achieved).  Valid only when
// the last transmission used non-zero power.
struct ChannelGainEstimate {
    double snr = 0.0;            // last observed SINR
    double offload_power = 0.0;  // power that produced it, watts
    bool valid = false;
};

// Greedy local-first rule: always run the CPU at full power; offload with
// just enough power that the predicted uplink rate clears the rest of the
// backlog.  Without an estimate the offload side falls back to full power.
Action gd_local_action(const Observation& obs, const ChannelGainEstimate& estimate,
                       const ScenarioConfig& cfg);

// Greedy offload-first rule: always transmit at full power; run the CPU
// with just enough power that local execution clears whatever the predicted
// uplink rate leaves over.  Without an estimate the local side falls back to
// full power.
Action gd_offload_action(const Observation& obs, const ChannelGainEstimate& estimate,
                         const ScenarioConfig& cfg);

namespace detail {

class GreedyPolicy : public Policy {
public:
    explicit GreedyPolicy(const ScenarioConfig& cfg) : cfg_(cfg) {}
    void begin_episode() override { estimate_ = ChannelGainEstimate{}; }
    void observe(const Action& taken, const StepOutcome& outcome) override;

protected:
    ScenarioConfig cfg_;
    ChannelGainEstimate estimate_;
};

} // namespace detail

class GdLocalPolicy : public detail::GreedyPolicy {
public:
    using GreedyPolicy::GreedyPolicy;
    Action act(const Observation& obs, Environment& env) override;
};

class GdOffloadPolicy : public detail::GreedyPolicy {
public:
    using GreedyPolicy::GreedyPolicy;
    Action act(const Observation& obs, Environment& env) override;
};

} // namespace vecsim
