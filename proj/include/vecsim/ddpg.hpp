#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "vecsim/env.hpp"
#include "vecsim/neural.hpp"
#include "vecsim/policy.hpp"
#include "vecsim/rng.hpp"

namespace vecsim {

struct Transition {
    std::array<double, 3> state;         // normalized observation
    std::array<double, 2> action;        // physical watts (offload, local)
    double reward = 0.0;
    std::array<double, 3> next_state;    // normalized observation
};

// Fixed-capacity ring; overwrites the oldest transition when full.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void add(const Transition& t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return data_.size(); }
    // Uniform draw with replacement.
    const Transition& sample(Rng& rng) const;
    const Transition& at(std::size_t i) const { return data_[i]; }

private:
    std::vector<Transition> data_;
    std::size_t cursor_ = 0;
    std::size_t size_ = 0;
};

struct AgentConfig {
    double discount = 0.99;
    double target_update_rate = 0.001;  // tau of the soft target updates
    int batch_size = 64;
    int max_episodes = 2000;
    int eval_episodes = 10;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    std::size_t replay_capacity = 250000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double ou_decay = 0.15;
    double ou_volatility = 0.02;
    int hidden1 = 400;
    int hidden2 = 300;
    int checkpoint_every = 0;  // episodes between periodic checkpoints; 0 = off
};

void validate(const AgentConfig& cfg);

// Deterministic policy-gradient learner for the two-component power action.
// Actor maps the 3-component normalized observation through two rectifier
// hidden layers to sigmoid outputs scaled by the power boxes; the critic
// scores (state, action) pairs with the action normalized per dimension.
class DdpgAgent {
public:
    DdpgAgent(const AgentConfig& agent_cfg, const ScenarioConfig& scenario,
              std::uint64_t seed);

    // Actor output for one normalized observation, optionally with
    // exploration noise; clipped to the power boxes.
    Action select_action(const std::array<double, 3>& state, bool explore);

    void reset_exploration() { noise_.reset(); }

    // y_i = r_i + discount * Q_target(s'_i, mu_target(s'_i)) for every
    // transition, including episode-final ones (no terminal cutoff).
    std::vector<double> critic_targets(const std::vector<Transition>& batch);

    // One Adam step on the mean squared Bellman error; returns the pre-step
    // loss.
    double update_critic(const std::vector<Transition>& batch, const std::vector<double>& targets);

    // One Adam ascent step along the deterministic policy gradient
    // (1/I) sum ∂Q/∂a * ∂mu/∂θ; the critic is read-only here.  Returns the
    // mean critic value of the batch before the step.
    double update_actor(const std::vector<Transition>& batch);

    void soft_update_targets();

    ReplayBuffer& replay() { return replay_; }
    Rng& replay_rng() { return replay_rng_; }
    const AgentConfig& config() const { return cfg_; }
    const DenseNet& actor() const { return actor_; }
    const DenseNet& critic() const { return critic_; }
    DenseNet& mutable_actor() { return actor_; }
    void set_actor(const DenseNet& actor);

    std::vector<Transition> sample_batch(int count);

    struct TrainResult {
        std::vector<double> learning_curve;  // mean per-slot reward of each episode
        std::int64_t gradient_updates = 0;
    };

    // Training loop: per slot select a noisy action, store the transition,
    // and once the buffer holds more than one batch run one critic step, one
    // actor step and one soft target update.  `on_episode` (optional) is
    // called after each episode with (episode index, mean slot reward).
    TrainResult train(Environment& env, int episodes,
                      const std::function<void(int, double)>& on_episode = {});

private:
    AgentConfig cfg_;
    std::array<double, 2> action_scale_;
    DenseNet actor_, critic_, target_actor_, target_critic_;
    AdamState actor_opt_, critic_opt_;
    OuNoise noise_;
    ReplayBuffer replay_;
    Rng ou_rng_;
    Rng replay_rng_;

    // Preallocated workspaces for the per-slot updates.
    ForwardCache actor_cache_, critic_cache_, target_actor_cache_, target_critic_cache_;
    Gradients actor_grads_, critic_grads_;
    std::vector<double> ws_states_, ws_critic_in_, ws_out_grad_, ws_critic_in_grad_,
        ws_actor_out_grad_;
};

// Wraps the trained actor as an evaluation policy (no exploration).
class ActorPolicy : public Policy {
public:
    explicit ActorPolicy(const DenseNet& actor, const ScenarioConfig& scenario);
    Action act(const Observation& obs, Environment& env) override;

private:
    const DenseNet& actor_;
    std::array<double, 2> scale_;
};

// One evaluated slot, as delivered to the metrics callback.
struct EvalRecord {
    int episode = 0;
    double reward = 0.0;
    StepDiagnostics diagnostics;
    ChannelTraceRow channel;
    double buffer_after = 0.0;  // backlog right after the slot, bits
};

struct EvalSummary {
    int episodes = 0;
    std::int64_t slots = 0;
    double mean_offload_power = 0.0;   // watts, averaged over all slots
    double mean_local_power = 0.0;
    double mean_total_power = 0.0;
    double mean_buffer_bits = 0.0;
    double mean_slot_reward = 0.0;
    double mean_discounted_return = 0.0;  // per episode
    std::int64_t total_overflow = 0;
};

// Runs `episodes` greedy episodes of `policy` on environments produced by
// `make_env(episode_index)`; aggregates power/backlog/reward statistics and
// streams per-slot records to `on_record` when provided.
EvalSummary evaluate(Policy& policy, const std::function<Environment(int)>& make_env,
                     int episodes, double discount,
                     const std::function<void(const EvalRecord&)>& on_record = {});

} // namespace vecsim
