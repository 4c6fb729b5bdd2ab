#include "vecsim/ddpg.hpp"

#include <algorithm>
#include <cmath>

#include "vecsim/errors.hpp"

namespace vecsim {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : data_(capacity) {
    if (capacity == 0) throw ContractViolation("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::add(const Transition& t) {
    data_[cursor_] = t;
    cursor_ = (cursor_ + 1) % data_.size();
    size_ = std::min(size_ + 1, data_.size());
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
    if (size_ == 0) throw ContractViolation("ReplayBuffer: sampling from empty buffer");
    return data_[rng.uniform_index(size_)];
}

void validate(const AgentConfig& cfg) {
    auto bad = [](const char* msg) { throw ConfigError(std::string("invalid agent: ") + msg); };
    if (cfg.discount < 0.0 || cfg.discount > 1.0) bad("discount outside [0, 1]");
    if (cfg.target_update_rate <= 0.0 || cfg.target_update_rate > 1.0)
        bad("target_update_rate outside (0, 1]");
    if (cfg.batch_size < 1) bad("batch_size must be >= 1");
    if (cfg.max_episodes < 1) bad("max_episodes must be >= 1");
    if (cfg.eval_episodes < 1) bad("eval_episodes must be >= 1");
    if (cfg.actor_lr <= 0.0 || cfg.critic_lr <= 0.0) bad("learning rates must be positive");
    if (cfg.replay_capacity < static_cast<std::size_t>(cfg.batch_size))
        bad("replay_capacity must hold at least one batch");
    if (cfg.ou_decay < 0.0 || cfg.ou_decay > 1.0) bad("ou_decay outside [0, 1]");
    if (cfg.ou_volatility < 0.0) bad("ou_volatility must be non-negative");
    if (cfg.hidden1 < 1 || cfg.hidden2 < 1) bad("hidden layer sizes must be >= 1");
    if (cfg.checkpoint_every < 0) bad("checkpoint_every must be >= 0");
}

namespace {

AgentConfig validated(AgentConfig cfg) {
    validate(cfg);
    return cfg;
}

} // namespace

DdpgAgent::DdpgAgent(const AgentConfig& agent_cfg, const ScenarioConfig& scenario,
                     std::uint64_t seed)
    : cfg_(validated(agent_cfg)),
      action_scale_{scenario.max_offload_power, scenario.max_local_power},
      noise_(2, cfg_.ou_decay, cfg_.ou_volatility),
      replay_(cfg_.replay_capacity),
      ou_rng_(derive_stream_seed(seed, StreamTag::exploration_noise)),
      replay_rng_(derive_stream_seed(seed, StreamTag::replay_sampling)) {
    Rng init_rng(derive_stream_seed(seed, StreamTag::weight_init));
    actor_ = DenseNet::make({3, cfg_.hidden1, cfg_.hidden2, 2},
                            {Activation::rectifier, Activation::rectifier, Activation::sigmoid},
                            init_rng);
    critic_ = DenseNet::make({5, cfg_.hidden1, cfg_.hidden2, 1},
                             {Activation::rectifier, Activation::rectifier, Activation::identity},
                             init_rng);
    target_actor_ = actor_;
    target_critic_ = critic_;
    actor_opt_ = AdamState::make(actor_, cfg_.actor_lr, cfg_.adam_beta1, cfg_.adam_beta2,
                                 cfg_.adam_epsilon);
    critic_opt_ = AdamState::make(critic_, cfg_.critic_lr, cfg_.adam_beta1, cfg_.adam_beta2,
                                  cfg_.adam_epsilon);
}

void DdpgAgent::set_actor(const DenseNet& actor) {
    if (actor.layer_sizes != actor_.layer_sizes)
        throw ContractViolation("set_actor: architecture mismatch");
    actor_ = actor;
    target_actor_ = actor;
}

Action DdpgAgent::select_action(const std::array<double, 3>& state, bool explore) {
    const std::vector<double> out = forward(actor_, std::span<const double>(state));
    double p_o = out[0] * action_scale_[0];
    double p_l = out[1] * action_scale_[1];
    if (explore) {
        const std::vector<double>& n = noise_.sample(ou_rng_);
        p_o += n[0];
        p_l += n[1];
    }
    Action a;
    a.offload_power = std::clamp(p_o, 0.0, action_scale_[0]);
    a.local_power = std::clamp(p_l, 0.0, action_scale_[1]);
    return a;
}

std::vector<double> DdpgAgent::critic_targets(const std::vector<Transition>& batch) {
    const int count = static_cast<int>(batch.size());
    if (count == 0) throw ContractViolation("critic_targets: empty batch");

    ws_states_.resize(static_cast<std::size_t>(count) * 3);
    for (int i = 0; i < count; ++i)
        std::copy(batch[static_cast<std::size_t>(i)].next_state.begin(),
                  batch[static_cast<std::size_t>(i)].next_state.end(),
                  ws_states_.begin() + static_cast<std::size_t>(i) * 3);
    forward(target_actor_, ws_states_.data(), count, target_actor_cache_);

    // Critic input rows: [normalized state, normalized action].  The target
    // actor's sigmoid outputs already live on the normalized action scale.
    const std::vector<double>& mu = target_actor_cache_.output();
    ws_critic_in_.resize(static_cast<std::size_t>(count) * 5);
    for (int i = 0; i < count; ++i) {
        double* row = ws_critic_in_.data() + static_cast<std::size_t>(i) * 5;
        const auto& s = batch[static_cast<std::size_t>(i)].next_state;
        row[0] = s[0];
        row[1] = s[1];
        row[2] = s[2];
        row[3] = mu[static_cast<std::size_t>(i) * 2];
        row[4] = mu[static_cast<std::size_t>(i) * 2 + 1];
    }
    forward(target_critic_, ws_critic_in_.data(), count, target_critic_cache_);

    std::vector<double> targets(static_cast<std::size_t>(count));
    const std::vector<double>& q = target_critic_cache_.output();
    for (int i = 0; i < count; ++i)
        targets[static_cast<std::size_t>(i)] =
            batch[static_cast<std::size_t>(i)].reward + cfg_.discount * q[static_cast<std::size_t>(i)];
    return targets;
}

double DdpgAgent::update_critic(const std::vector<Transition>& batch,
                                const std::vector<double>& targets) {
    const int count = static_cast<int>(batch.size());
    if (count == 0 || targets.size() != batch.size())
        throw ContractViolation("update_critic: batch/targets size mismatch");

    ws_critic_in_.resize(static_cast<std::size_t>(count) * 5);
    for (int i = 0; i < count; ++i) {
        double* row = ws_critic_in_.data() + static_cast<std::size_t>(i) * 5;
        const Transition& t = batch[static_cast<std::size_t>(i)];
        row[0] = t.state[0];
        row[1] = t.state[1];
        row[2] = t.state[2];
        row[3] = t.action[0] / action_scale_[0];
        row[4] = t.action[1] / action_scale_[1];
    }
    forward(critic_, ws_critic_in_.data(), count, critic_cache_);

    const std::vector<double>& q = critic_cache_.output();
    ws_out_grad_.resize(static_cast<std::size_t>(count));
    double loss = 0.0;
    for (int i = 0; i < count; ++i) {
        const double diff = q[static_cast<std::size_t>(i)] - targets[static_cast<std::size_t>(i)];
        loss += diff * diff;
        ws_out_grad_[static_cast<std::size_t>(i)] = 2.0 * diff / count;
    }
    loss /= count;
    if (!std::isfinite(loss)) throw TrainingDivergenceError("update_critic: non-finite loss");

    backward(critic_, critic_cache_, ws_out_grad_.data(), &critic_grads_);
    adam_step(critic_opt_, critic_, critic_grads_);
    return loss;
}

double DdpgAgent::update_actor(const std::vector<Transition>& batch) {
    const int count = static_cast<int>(batch.size());
    if (count == 0) throw ContractViolation("update_actor: empty batch");

    ws_states_.resize(static_cast<std::size_t>(count) * 3);
    for (int i = 0; i < count; ++i)
        std::copy(batch[static_cast<std::size_t>(i)].state.begin(),
                  batch[static_cast<std::size_t>(i)].state.end(),
                  ws_states_.begin() + static_cast<std::size_t>(i) * 3);
    forward(actor_, ws_states_.data(), count, actor_cache_);

    const std::vector<double>& mu = actor_cache_.output();
    ws_critic_in_.resize(static_cast<std::size_t>(count) * 5);
    for (int i = 0; i < count; ++i) {
        double* row = ws_critic_in_.data() + static_cast<std::size_t>(i) * 5;
        const auto& s = batch[static_cast<std::size_t>(i)].state;
        row[0] = s[0];
        row[1] = s[1];
        row[2] = s[2];
        row[3] = mu[static_cast<std::size_t>(i) * 2];
        row[4] = mu[static_cast<std::size_t>(i) * 2 + 1];
    }
    forward(critic_, ws_critic_in_.data(), count, critic_cache_);

    double mean_q = 0.0;
    for (double v : critic_cache_.output()) mean_q += v;
    mean_q /= count;

    // Ascend the mean critic value: descend -J, so dL/dq = -1/I per sample.
    // Only the critic's input gradient is needed; its parameters stay fixed.
    ws_out_grad_.assign(static_cast<std::size_t>(count), -1.0 / count);
    ws_critic_in_grad_.resize(static_cast<std::size_t>(count) * 5);
    backward(critic_, critic_cache_, ws_out_grad_.data(), nullptr, ws_critic_in_grad_.data());

    ws_actor_out_grad_.resize(static_cast<std::size_t>(count) * 2);
    for (int i = 0; i < count; ++i) {
        ws_actor_out_grad_[static_cast<std::size_t>(i) * 2] =
            ws_critic_in_grad_[static_cast<std::size_t>(i) * 5 + 3];
        ws_actor_out_grad_[static_cast<std::size_t>(i) * 2 + 1] =
            ws_critic_in_grad_[static_cast<std::size_t>(i) * 5 + 4];
    }
    backward(actor_, actor_cache_, ws_actor_out_grad_.data(), &actor_grads_);
    adam_step(actor_opt_, actor_, actor_grads_);
    return mean_q;
}

void DdpgAgent::soft_update_targets() {
    soft_update(target_actor_, actor_, cfg_.target_update_rate);
    soft_update(target_critic_, critic_, cfg_.target_update_rate);
}

std::vector<Transition> DdpgAgent::sample_batch(int count) {
    std::vector<Transition> batch;
    batch.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) batch.push_back(replay_.sample(replay_rng_));
    return batch;
}

DdpgAgent::TrainResult DdpgAgent::train(Environment& env, int episodes,
                                        const std::function<void(int, double)>& on_episode) {
    TrainResult result;
    result.learning_curve.reserve(static_cast<std::size_t>(episodes));
    std::vector<Transition> batch;
    batch.reserve(static_cast<std::size_t>(cfg_.batch_size));

    for (int episode = 1; episode <= episodes; ++episode) {
        noise_.reset();
        Observation obs = env.reset();
        std::array<double, 3> state = env.normalize_observation(obs);
        double reward_sum = 0.0;
        int slots = 0;

        while (!env.done()) {
            const Action action = select_action(state, /*explore=*/true);
            const StepOutcome out = env.step(action);
            const std::array<double, 3> next_state = env.normalize_observation(out.next_obs);

            Transition t;
            t.state = state;
            t.action = {out.diagnostics.offload_power, out.diagnostics.local_power};
            t.reward = out.reward;
            t.next_state = next_state;
            replay_.add(t);

            if (replay_.size() > static_cast<std::size_t>(cfg_.batch_size)) {
                batch.clear();
                for (int i = 0; i < cfg_.batch_size; ++i)
                    batch.push_back(replay_.sample(replay_rng_));
                const std::vector<double> targets = critic_targets(batch);
                update_critic(batch, targets);
                update_actor(batch);
                soft_update_targets();
                ++result.gradient_updates;
            }

            reward_sum += out.reward;
            ++slots;
            state = next_state;
        }

        result.learning_curve.push_back(reward_sum / std::max(1, slots));
        if (on_episode) on_episode(episode, result.learning_curve.back());
    }
    return result;
}

ActorPolicy::ActorPolicy(const DenseNet& actor, const ScenarioConfig& scenario)
    : actor_(actor), scale_{scenario.max_offload_power, scenario.max_local_power} {}

Action ActorPolicy::act(const Observation& obs, Environment& env) {
    const std::array<double, 3> state = env.normalize_observation(obs);
    const std::vector<double> out = forward(actor_, std::span<const double>(state));
    Action a;
    a.offload_power = std::clamp(out[0] * scale_[0], 0.0, scale_[0]);
    a.local_power = std::clamp(out[1] * scale_[1], 0.0, scale_[1]);
    return a;
}

EvalSummary evaluate(Policy& policy, const std::function<Environment(int)>& make_env,
                     int episodes, double discount,
                     const std::function<void(const EvalRecord&)>& on_record) {
    if (episodes < 1) throw ContractViolation("evaluate: need at least one episode");
    EvalSummary summary;
    summary.episodes = episodes;
    std::vector<double> rewards;

    for (int episode = 0; episode < episodes; ++episode) {
        Environment env = make_env(episode);
        policy.begin_episode();
        Observation obs = env.reset();
        rewards.clear();
        rewards.reserve(static_cast<std::size_t>(env.episode_length()));

        while (!env.done()) {
            const Action action = policy.act(obs, env);
            const StepOutcome out = env.step(action);
            policy.observe(action, out);

            summary.mean_offload_power += out.diagnostics.offload_power;
            summary.mean_local_power += out.diagnostics.local_power;
            summary.mean_buffer_bits += out.next_obs.buffer_bits;
            summary.mean_slot_reward += out.reward;
            summary.total_overflow += out.diagnostics.overflow;
            ++summary.slots;
            rewards.push_back(out.reward);

            if (on_record) {
                EvalRecord rec;
                rec.episode = episode;
                rec.reward = out.reward;
                rec.diagnostics = out.diagnostics;
                rec.channel = env.last_channel();
                rec.buffer_after = out.next_obs.buffer_bits;
                on_record(rec);
            }
            obs = out.next_obs;
        }
        summary.mean_discounted_return += discounted_return(rewards, discount);
    }

    const double slots = static_cast<double>(summary.slots);
    summary.mean_offload_power /= slots;
    summary.mean_local_power /= slots;
    summary.mean_total_power = summary.mean_offload_power + summary.mean_local_power;
    summary.mean_buffer_bits /= slots;
    summary.mean_slot_reward /= slots;
    summary.mean_discounted_return /= episodes;
    return summary;
}

} // namespace vecsim
