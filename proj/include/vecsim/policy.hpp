#pragma once

#include "vecsim/env.hpp"

namespace vecsim {

// A per-slot power controller.  Implementations may keep rolling state
// between slots (e.g. a channel estimate); begin_episode() clears it.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_episode() {}
    virtual Action act(const Observation& obs, Environment& env) = 0;
    // Called after the environment applied `taken`; lets the policy observe
    // the feedback carried by the outcome.
    virtual void observe(const Action& taken, const StepOutcome& outcome) {
        (void)taken;
        (void)outcome;
    }
};

} // namespace vecsim
