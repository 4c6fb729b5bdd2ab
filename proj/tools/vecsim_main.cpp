// Command-line front end: train, eval, compare and sweep runs over the
// vehicular offloading simulator.  Every configuration field can be set in a
// JSON config file and overridden by a flag of the same name (or an
// environment variable VECSIM_<NAME>).

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "vecsim/errors.hpp"
#include "vecsim/harness.hpp"

namespace {

using vecsim::SimConfig;

// Field-for-field optional mirror of SimConfig; only values the user passed
// are applied on top of the config file.
struct Overrides {
    std::optional<int> num_antennas, num_lanes;
    std::optional<double> lane_width, first_lane_offset, bs_height, coverage, slot_duration,
        bandwidth, noise_power, ref_gain, path_loss_exponent, wavelength, comp_intensity,
        switched_capacitance, max_offload_power, max_local_power, arrival_rate, safety_time;
    std::optional<std::vector<double>> lane_velocities;
    std::optional<std::int64_t> buffer_capacity;
    std::optional<std::vector<double>> reward_weights;
    std::optional<std::uint64_t> rng_seed;

    std::optional<double> discount, target_update_rate, actor_lr, critic_lr, adam_beta1,
        adam_beta2, adam_epsilon, ou_decay, ou_volatility;
    std::optional<int> batch_size, max_episodes, eval_episodes, hidden1, hidden2,
        checkpoint_every;
    std::optional<std::size_t> replay_capacity;

    std::optional<int> target_lane;
};

std::string env_name(std::string flag) {
    for (char& c : flag) c = c == '-' ? '_' : static_cast<char>(std::toupper(c));
    return "VECSIM_" + flag;
}

template <typename T>
void add_override(CLI::App* cmd, const std::string& name, std::optional<T>& slot,
                  const std::string& help) {
    cmd->add_option("--" + name, slot, help)->envname(env_name(name));
}

void add_config_options(CLI::App* cmd, Overrides& o) {
    add_override(cmd, "num_antennas", o.num_antennas, "BS receive antennas");
    add_override(cmd, "num_lanes", o.num_lanes, "number of one-way lanes");
    add_override(cmd, "lane_width", o.lane_width, "lane width [m]");
    add_override(cmd, "first_lane_offset", o.first_lane_offset, "BS to first lane [m]");
    add_override(cmd, "bs_height", o.bs_height, "BS antenna height [m]");
    add_override(cmd, "coverage", o.coverage, "covered road length [m]");
    cmd->add_option("--lane_velocities", o.lane_velocities, "per-lane speed [m/s]")
        ->envname(env_name("lane_velocities"))
        ->delimiter(',');
    add_override(cmd, "slot_duration", o.slot_duration, "decision slot [s]");
    add_override(cmd, "bandwidth", o.bandwidth, "uplink bandwidth [Hz]");
    add_override(cmd, "noise_power", o.noise_power, "receiver noise power [W]");
    add_override(cmd, "ref_gain", o.ref_gain, "path gain at 1 m (linear)");
    add_override(cmd, "path_loss_exponent", o.path_loss_exponent, "path-loss exponent");
    add_override(cmd, "wavelength", o.wavelength, "carrier wavelength [m]");
    add_override(cmd, "comp_intensity", o.comp_intensity, "CPU cycles per bit");
    add_override(cmd, "switched_capacitance", o.switched_capacitance, "CPU power constant");
    add_override(cmd, "max_offload_power", o.max_offload_power, "offload power box [W]");
    add_override(cmd, "max_local_power", o.max_local_power, "local power box [W]");
    add_override(cmd, "arrival_rate", o.arrival_rate, "task arrival rate [bit/s]");
    add_override(cmd, "safety_time", o.safety_time, "vehicle headway [s]");
    add_override(cmd, "buffer_capacity", o.buffer_capacity, "task buffer [bit], 0 = default");
    cmd->add_option("--reward_weights", o.reward_weights, "power and backlog weights")
        ->envname(env_name("reward_weights"))
        ->expected(2)
        ->delimiter(',');
    add_override(cmd, "rng_seed", o.rng_seed, "config-level seed (see also --seed)");

    add_override(cmd, "discount", o.discount, "discount factor");
    add_override(cmd, "target_update_rate", o.target_update_rate, "soft update rate tau");
    add_override(cmd, "batch_size", o.batch_size, "mini-batch size");
    add_override(cmd, "max_episodes", o.max_episodes, "training episodes");
    add_override(cmd, "eval_episodes", o.eval_episodes, "default evaluation episodes");
    add_override(cmd, "actor_lr", o.actor_lr, "actor learning rate");
    add_override(cmd, "critic_lr", o.critic_lr, "critic learning rate");
    add_override(cmd, "replay_capacity", o.replay_capacity, "replay buffer size");
    add_override(cmd, "adam_beta1", o.adam_beta1, "Adam beta1");
    add_override(cmd, "adam_beta2", o.adam_beta2, "Adam beta2");
    add_override(cmd, "adam_epsilon", o.adam_epsilon, "Adam epsilon");
    add_override(cmd, "ou_decay", o.ou_decay, "exploration noise decay rate");
    add_override(cmd, "ou_volatility", o.ou_volatility, "exploration noise volatility");
    add_override(cmd, "hidden1", o.hidden1, "first hidden layer width");
    add_override(cmd, "hidden2", o.hidden2, "second hidden layer width");
    add_override(cmd, "checkpoint_every", o.checkpoint_every,
                 "episodes between periodic checkpoints (0 = off)");
    add_override(cmd, "target_lane", o.target_lane, "lane of the controlled vehicle");
}

void apply(const Overrides& o, SimConfig& cfg) {
    vecsim::ScenarioConfig& s = cfg.scenario;
    vecsim::AgentConfig& a = cfg.agent;
    auto set = [](auto& dst, const auto& src) {
        if (src) dst = static_cast<std::decay_t<decltype(dst)>>(*src);
    };
    set(s.num_antennas, o.num_antennas);
    set(s.num_lanes, o.num_lanes);
    set(s.lane_width, o.lane_width);
    set(s.first_lane_offset, o.first_lane_offset);
    set(s.bs_height, o.bs_height);
    set(s.coverage, o.coverage);
    if (o.lane_velocities) s.lane_velocities = *o.lane_velocities;
    set(s.slot_duration, o.slot_duration);
    set(s.bandwidth, o.bandwidth);
    set(s.noise_power, o.noise_power);
    set(s.ref_gain, o.ref_gain);
    set(s.path_loss_exponent, o.path_loss_exponent);
    set(s.wavelength, o.wavelength);
    set(s.comp_intensity, o.comp_intensity);
    set(s.switched_capacitance, o.switched_capacitance);
    set(s.max_offload_power, o.max_offload_power);
    set(s.max_local_power, o.max_local_power);
    set(s.arrival_rate, o.arrival_rate);
    set(s.safety_time, o.safety_time);
    set(s.buffer_capacity, o.buffer_capacity);
    if (o.reward_weights) s.reward_weights = {(*o.reward_weights)[0], (*o.reward_weights)[1]};
    set(s.rng_seed, o.rng_seed);

    set(a.discount, o.discount);
    set(a.target_update_rate, o.target_update_rate);
    set(a.batch_size, o.batch_size);
    set(a.max_episodes, o.max_episodes);
    set(a.eval_episodes, o.eval_episodes);
    set(a.actor_lr, o.actor_lr);
    set(a.critic_lr, o.critic_lr);
    set(a.replay_capacity, o.replay_capacity);
    set(a.adam_beta1, o.adam_beta1);
    set(a.adam_beta2, o.adam_beta2);
    set(a.adam_epsilon, o.adam_epsilon);
    set(a.ou_decay, o.ou_decay);
    set(a.ou_volatility, o.ou_volatility);
    set(a.hidden1, o.hidden1);
    set(a.hidden2, o.hidden2);
    set(a.checkpoint_every, o.checkpoint_every);
    set(cfg.target_lane, o.target_lane);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIMO-NOMA vehicular edge offloading simulator and power-allocation learner"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir;
    int episodes = 0;
    std::string policy = vecsim::kPolicyOptimal;
    std::string checkpoint;
    bool channel_trace = false;
    std::vector<double> rates;
    Overrides overrides;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON configuration file")
            ->envname("VECSIM_CONFIG");
        cmd->add_option("--seed", seed, "master seed (overrides config rng_seed)")
            ->envname("VECSIM_SEED")
            ->each([&seed_given](const std::string&) { seed_given = true; });
        cmd->add_option("--out", out_dir, "output directory")->envname("VECSIM_OUT");
        cmd->add_option("--episodes", episodes, "episode count (0 = config default)")
            ->envname("VECSIM_EPISODES");
        add_config_options(cmd, overrides);
    };

    CLI::App* train = app.add_subcommand("train", "train the power-allocation agent");
    add_common(train);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate one policy");
    add_common(eval_cmd);
    eval_cmd->add_option("--policy", policy, "optimal | gd-local | gd-offload");
    eval_cmd->add_option("--checkpoint", checkpoint, "parameter file for policy 'optimal'");
    eval_cmd->add_flag("--channel-trace", channel_trace, "also export per-slot channel telemetry");

    CLI::App* compare = app.add_subcommand("compare", "evaluate all policies on shared episodes");
    add_common(compare);
    compare->add_option("--checkpoint", checkpoint, "parameter file for policy 'optimal'")
        ->required();

    CLI::App* sweep = app.add_subcommand("sweep", "compare policies across arrival rates");
    add_common(sweep);
    sweep->add_option("--checkpoint", checkpoint, "parameter file for policy 'optimal'")
        ->required();
    sweep->add_option("--rates", rates, "arrival rates to sweep [bit/s]")
        ->required()
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        SimConfig cfg = config_path.empty() ? SimConfig{} : vecsim::load_config(config_path);
        apply(overrides, cfg);
        const std::uint64_t master_seed = seed_given ? seed : cfg.scenario.rng_seed;

        const std::string mode = app.get_subcommands().front()->get_name();
        if (out_dir.empty()) out_dir = "runs/" + mode + "-seed" + std::to_string(master_seed);

        if (train->parsed()) {
            const vecsim::TrainOutputs outputs =
                vecsim::run_train(cfg, master_seed, out_dir, episodes);
            std::printf("trained %zu episodes (%lld gradient updates); checkpoint: %s\n",
                        outputs.learning_curve.size(),
                        static_cast<long long>(outputs.gradient_updates),
                        outputs.checkpoint.string().c_str());
        } else if (eval_cmd->parsed()) {
            const int n = episodes > 0 ? episodes : cfg.agent.eval_episodes;
            const vecsim::EvalOutputs outputs = vecsim::run_eval(
                cfg, policy, checkpoint, n, master_seed, out_dir, channel_trace);
            std::printf("policy %s: avg power %.6f W, avg buffer %.1f bits, return %.4f\n",
                        policy.c_str(), outputs.summary.mean_total_power,
                        outputs.summary.mean_buffer_bits,
                        outputs.summary.mean_discounted_return);
        } else if (compare->parsed()) {
            const int n = episodes > 0 ? episodes : cfg.agent.eval_episodes;
            const auto rows = vecsim::run_compare(cfg, checkpoint, n, master_seed, out_dir);
            for (const auto& row : rows)
                std::printf("%-11s power %.6f W  buffer %12.1f bits  return %10.4f  cut %6.2f%%\n",
                            row.policy.c_str(), row.summary.mean_total_power,
                            row.summary.mean_buffer_bits, row.summary.mean_discounted_return,
                            row.optimal_reduction_pct);
        } else if (sweep->parsed()) {
            const int n = episodes > 0 ? episodes : cfg.agent.eval_episodes;
            vecsim::export_sweep(cfg, rates, checkpoint, n, master_seed, out_dir);
            std::printf("sweep over %zu arrival rates written to %s/sweep.csv\n", rates.size(),
                        out_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
