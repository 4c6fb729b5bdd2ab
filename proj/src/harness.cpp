#include "vecsim/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <memory>
#include <utility>

#include "vecsim/baselines.hpp"
#include "vecsim/errors.hpp"
#include "vecsim/neural.hpp"

namespace vecsim {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kPolicyOptimal = "optimal";
const char* const kPolicyGdLocal = "gd-local";
const char* const kPolicyGdOffload = "gd-offload";

void validate(const SimConfig& cfg) {
    validate(cfg.scenario);
    validate(cfg.agent);
    if (cfg.target_lane < 1 || cfg.target_lane > cfg.scenario.num_lanes)
        throw ConfigError("target_lane outside [1, num_lanes]");
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// ---------------------------------------------------------------------------
// configuration (de)serialization

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    std::string offenders;
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) offenders += (offenders.empty() ? "" : ", ") + key;
    }
    if (!offenders.empty())
        throw ConfigError("unknown config key(s) in " + where + ": " + offenders);
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

nlohmann::json to_json(const SimConfig& cfg) {
    const ScenarioConfig& s = cfg.scenario;
    const AgentConfig& a = cfg.agent;
    json js{{"num_antennas", s.num_antennas},
            {"num_lanes", s.num_lanes},
            {"lane_width", s.lane_width},
            {"first_lane_offset", s.first_lane_offset},
            {"bs_height", s.bs_height},
            {"coverage", s.coverage},
            {"lane_velocities", s.lane_velocities},
            {"slot_duration", s.slot_duration},
            {"bandwidth", s.bandwidth},
            {"noise_power", s.noise_power},
            {"ref_gain", s.ref_gain},
            {"path_loss_exponent", s.path_loss_exponent},
            {"wavelength", s.wavelength},
            {"comp_intensity", s.comp_intensity},
            {"switched_capacitance", s.switched_capacitance},
            {"max_offload_power", s.max_offload_power},
            {"max_local_power", s.max_local_power},
            {"arrival_rate", s.arrival_rate},
            {"safety_time", s.safety_time},
            {"buffer_capacity", s.buffer_capacity},
            {"reward_weights", s.reward_weights},
            {"rng_seed", s.rng_seed}};
    json ja{{"discount", a.discount},
            {"target_update_rate", a.target_update_rate},
            {"batch_size", a.batch_size},
            {"max_episodes", a.max_episodes},
            {"eval_episodes", a.eval_episodes},
            {"actor_lr", a.actor_lr},
            {"critic_lr", a.critic_lr},
            {"replay_capacity", a.replay_capacity},
            {"adam_beta1", a.adam_beta1},
            {"adam_beta2", a.adam_beta2},
            {"adam_epsilon", a.adam_epsilon},
            {"ou_decay", a.ou_decay},
            {"ou_volatility", a.ou_volatility},
            {"hidden1", a.hidden1},
            {"hidden2", a.hidden2},
            {"checkpoint_every", a.checkpoint_every}};
    return json{{"scenario", js}, {"agent", ja}, {"target_lane", cfg.target_lane}};
}

SimConfig config_from_json(const json& j) {
    SimConfig cfg;
    reject_unknown_keys(j, {"scenario", "agent", "target_lane"}, "top level");
    read_field(j, "target_lane", cfg.target_lane);

    if (j.contains("scenario")) {
        const json& js = j.at("scenario");
        reject_unknown_keys(js,
                            {"num_antennas", "num_lanes", "lane_width", "first_lane_offset",
                             "bs_height", "coverage", "lane_velocities", "slot_duration",
                             "bandwidth", "noise_power", "ref_gain", "path_loss_exponent",
                             "wavelength", "comp_intensity", "switched_capacitance",
                             "max_offload_power", "max_local_power", "arrival_rate",
                             "safety_time", "buffer_capacity", "reward_weights", "rng_seed"},
                            "scenario");
        ScenarioConfig& s = cfg.scenario;
        read_field(js, "num_antennas", s.num_antennas);
        read_field(js, "num_lanes", s.num_lanes);
        read_field(js, "lane_width", s.lane_width);
        read_field(js, "first_lane_offset", s.first_lane_offset);
        read_field(js, "bs_height", s.bs_height);
        read_field(js, "coverage", s.coverage);
        read_field(js, "lane_velocities", s.lane_velocities);
        read_field(js, "slot_duration", s.slot_duration);
        read_field(js, "bandwidth", s.bandwidth);
        read_field(js, "noise_power", s.noise_power);
        read_field(js, "ref_gain", s.ref_gain);
        read_field(js, "path_loss_exponent", s.path_loss_exponent);
        read_field(js, "wavelength", s.wavelength);
        read_field(js, "comp_intensity", s.comp_intensity);
        read_field(js, "switched_capacitance", s.switched_capacitance);
        read_field(js, "max_offload_power", s.max_offload_power);
        read_field(js, "max_local_power", s.max_local_power);
        read_field(js, "arrival_rate", s.arrival_rate);
        read_field(js, "safety_time", s.safety_time);
        read_field(js, "buffer_capacity", s.buffer_capacity);
        read_field(js, "reward_weights", s.reward_weights);
        read_field(js, "rng_seed", s.rng_seed);
    }
    if (j.contains("agent")) {
        const json& ja = j.at("agent");
        reject_unknown_keys(ja,
                            {"discount", "target_update_rate", "batch_size", "max_episodes",
                             "eval_episodes", "actor_lr", "critic_lr", "replay_capacity",
                             "adam_beta1", "adam_beta2", "adam_epsilon", "ou_decay",
                             "ou_volatility", "hidden1", "hidden2", "checkpoint_every"},
                            "agent");
        AgentConfig& a = cfg.agent;
        read_field(ja, "discount", a.discount);
        read_field(ja, "target_update_rate", a.target_update_rate);
        read_field(ja, "batch_size", a.batch_size);
        read_field(ja, "max_episodes", a.max_episodes);
        read_field(ja, "eval_episodes", a.eval_episodes);
        read_field(ja, "actor_lr", a.actor_lr);
        read_field(ja, "critic_lr", a.critic_lr);
        read_field(ja, "replay_capacity", a.replay_capacity);
        read_field(ja, "adam_beta1", a.adam_beta1);
        read_field(ja, "adam_beta2", a.adam_beta2);
        read_field(ja, "adam_epsilon", a.adam_epsilon);
        read_field(ja, "ou_decay", a.ou_decay);
        read_field(ja, "ou_volatility", a.ou_volatility);
        read_field(ja, "hidden1", a.hidden1);
        read_field(ja, "hidden2", a.hidden2);
        read_field(ja, "checkpoint_every", a.checkpoint_every);
    }
    return cfg;
}

SimConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void write_manifest(const RunManifest& manifest) {
    const fs::path dir(manifest.out_dir);
    fs::create_directories(dir);
    json j{{"mode", manifest.mode},
           {"seed", manifest.seed},
           {"policy", manifest.policy},
           {"checkpoint", manifest.checkpoint},
           {"out_dir", manifest.out_dir},
           {"config", to_json(manifest.config)}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigError("cannot write manifest in " + manifest.out_dir);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// CSV plumbing

namespace {

class CsvWriter {
public:
    CsvWriter(const fs::path& path, std::initializer_list<const char*> columns) : out_(path) {
        if (!out_) throw ConfigError("cannot open CSV for writing: " + path.string());
        bool first = true;
        for (const char* c : columns) {
            if (!first) out_ << ',';
            out_ << c;
            first = false;
        }
        out_ << '\n';
    }

    // Row cells are pre-formatted strings.
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

std::string fmt_int(std::int64_t v) { return std::to_string(v); }

} // namespace

// ---------------------------------------------------------------------------
// distance binning

DistanceBinnedSeries::DistanceBinnedSeries(int bins, double coverage)
    : coverage_(coverage),
      count_(static_cast<std::size_t>(bins), 0),
      sum_offload_(static_cast<std::size_t>(bins), 0.0),
      sum_local_(static_cast<std::size_t>(bins), 0.0),
      sum_buffer_(static_cast<std::size_t>(bins), 0.0),
      sum_reward_(static_cast<std::size_t>(bins), 0.0) {
    if (bins < 1 || coverage <= 0.0)
        throw ContractViolation("DistanceBinnedSeries: need bins >= 1 and positive coverage");
}

void DistanceBinnedSeries::add(double distance, double offload_power, double local_power,
                               double buffer_bits, double reward) {
    const int n = bins();
    int idx = static_cast<int>(std::floor((distance + coverage_ / 2.0) / (coverage_ / n)));
    idx = std::clamp(idx, 0, n - 1);
    const auto i = static_cast<std::size_t>(idx);
    ++count_[i];
    sum_offload_[i] += offload_power;
    sum_local_[i] += local_power;
    sum_buffer_[i] += buffer_bits;
    sum_reward_[i] += reward;
}

double DistanceBinnedSeries::bin_center(int i) const {
    return -coverage_ / 2.0 + (i + 0.5) * coverage_ / bins();
}

namespace {
double safe_mean(double sum, std::int64_t n) { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
} // namespace

double DistanceBinnedSeries::mean_offload_power(int i) const {
    return safe_mean(sum_offload_[static_cast<std::size_t>(i)], count_[static_cast<std::size_t>(i)]);
}
double DistanceBinnedSeries::mean_local_power(int i) const {
    return safe_mean(sum_local_[static_cast<std::size_t>(i)], count_[static_cast<std::size_t>(i)]);
}
double DistanceBinnedSeries::mean_buffer_bits(int i) const {
    return safe_mean(sum_buffer_[static_cast<std::size_t>(i)], count_[static_cast<std::size_t>(i)]);
}
double DistanceBinnedSeries::mean_reward(int i) const {
    return safe_mean(sum_reward_[static_cast<std::size_t>(i)], count_[static_cast<std::size_t>(i)]);
}

void DistanceBinnedSeries::write_csv(const fs::path& path) const {
    CsvWriter csv(path, {"bin_center_m", "mean_offload_power_w", "mean_local_power_w",
                         "mean_total_power_w", "mean_buffer_bits", "mean_reward", "samples"});
    for (int i = 0; i < bins(); ++i) {
        csv.row({format_double(bin_center(i)), format_double(mean_offload_power(i)),
                 format_double(mean_local_power(i)),
                 format_double(mean_offload_power(i) + mean_local_power(i)),
                 format_double(mean_buffer_bits(i)), format_double(mean_reward(i)),
                 fmt_int(samples(i))});
    }
}

// ---------------------------------------------------------------------------
// run modes

TrainOutputs run_train(SimConfig cfg, std::uint64_t seed, const fs::path& out_dir,
                       int episodes_override) {
    cfg.scenario.rng_seed = seed;
    validate(cfg);
    fs::create_directories(out_dir);
    write_manifest({cfg, seed, "train", kPolicyOptimal, "", out_dir.string()});

    Environment env(cfg.scenario, cfg.target_lane, seed);
    DdpgAgent agent(cfg.agent, cfg.scenario, seed);
    const int episodes = episodes_override > 0 ? episodes_override : cfg.agent.max_episodes;

    const fs::path checkpoint_path = out_dir / "checkpoint.bin";
    auto save_nets = [&agent](const fs::path& path) {
        save_checkpoint(path, {{"actor", &agent.actor()}, {"critic", &agent.critic()}});
    };

    CsvWriter curve(out_dir / "learning_curve.csv", {"episode", "mean_slot_reward"});
    TrainOutputs outputs;
    try {
        DdpgAgent::TrainResult result =
            agent.train(env, episodes, [&](int episode, double mean_reward) {
                curve.row({fmt_int(episode), format_double(mean_reward)});
                curve.flush(); // progress is visible while long runs stream

                if (cfg.agent.checkpoint_every > 0 &&
                    episode % cfg.agent.checkpoint_every == 0) {
                    char name[40];
                    std::snprintf(name, sizeof(name), "checkpoint_ep%06d.bin", episode);
                    save_nets(out_dir / name);
                }
            });
        outputs.learning_curve = std::move(result.learning_curve);
        outputs.gradient_updates = result.gradient_updates;
    } catch (const TrainingDivergenceError&) {
        curve.flush();
        save_nets(out_dir / "checkpoint_diverged.bin");
        throw;
    }
    save_nets(checkpoint_path);
    outputs.checkpoint = checkpoint_path;
    return outputs;
}

namespace {

struct PolicyBundle {
    std::unique_ptr<DenseNet> actor;  // keeps the loaded net alive
    std::unique_ptr<Policy> policy;
};

PolicyBundle make_policy(const std::string& id, const fs::path& checkpoint,
                         const SimConfig& cfg) {
    PolicyBundle bundle;
    if (id == kPolicyOptimal) {
        if (checkpoint.empty() || !fs::exists(checkpoint))
            throw ConfigError("policy 'optimal' needs an existing checkpoint (got '" +
                              checkpoint.string() + "')");
        auto nets = load_checkpoint(checkpoint);
        const auto it = nets.find("actor");
        if (it == nets.end())
            throw ConfigError("checkpoint has no 'actor' network: " + checkpoint.string());
        bundle.actor = std::make_unique<DenseNet>(std::move(it->second));
        bundle.policy = std::make_unique<ActorPolicy>(*bundle.actor, cfg.scenario);
    } else if (id == kPolicyGdLocal) {
        bundle.policy = std::make_unique<GdLocalPolicy>(cfg.scenario);
    } else if (id == kPolicyGdOffload) {
        bundle.policy = std::make_unique<GdOffloadPolicy>(cfg.scenario);
    } else {
        throw ConfigError("unknown policy '" + id + "' (expected optimal | gd-local | gd-offload)");
    }
    return bundle;
}

json summary_to_json(const EvalSummary& s) {
    return json{{"episodes", s.episodes},
                {"slots", s.slots},
                {"avg_total_power_W", s.mean_total_power},
                {"avg_offload_power_W", s.mean_offload_power},
                {"avg_local_power_W", s.mean_local_power},
                {"avg_buffer_bits", s.mean_buffer_bits},
                {"avg_slot_reward", s.mean_slot_reward},
                {"discounted_return", s.mean_discounted_return},
                {"overflow_total", s.total_overflow}};
}

EvalOutputs evaluate_policy(const SimConfig& cfg, const std::string& policy_id,
                            const fs::path& checkpoint, int episodes, std::uint64_t seed,
                            const fs::path* out_dir, bool channel_trace) {
    PolicyBundle bundle = make_policy(policy_id, checkpoint, cfg);
    const std::uint64_t eval_master = derive_stream_seed(seed, StreamTag::evaluation);
    auto make_env = [&cfg, eval_master](int episode) {
        return Environment(cfg.scenario, cfg.target_lane,
                           derive_stream_seed(eval_master, static_cast<std::uint64_t>(episode)));
    };

    std::unique_ptr<CsvWriter> trace;
    std::unique_ptr<CsvWriter> channel;
    if (out_dir != nullptr) {
        trace = std::make_unique<CsvWriter>(
            *out_dir / "trace.csv",
            std::initializer_list<const char*>{"episode", "slot", "d_m", "p_o", "p_l", "gamma",
                                               "B_bits", "arrivals", "d_local", "d_offload",
                                               "overflow", "reward"});
        if (channel_trace) {
            channel = std::make_unique<CsvWriter>(
                *out_dir / "channel_trace.csv",
                std::initializer_list<const char*>{"episode", "slot", "g_norm_sq", "rho",
                                                   "target_sinr"});
        }
    }

    EvalOutputs outputs{EvalSummary{}, DistanceBinnedSeries(50, cfg.scenario.coverage)};
    const int max_vehicles_cols = cfg.scenario.num_lanes + 1;
    outputs.summary = evaluate(
        *bundle.policy, make_env, episodes, cfg.agent.discount,
        [&](const EvalRecord& rec) {
            outputs.bins.add(rec.diagnostics.decision_distance, rec.diagnostics.offload_power,
                             rec.diagnostics.local_power, rec.buffer_after, rec.reward);
            if (trace) {
                trace->row({fmt_int(rec.episode + 1), fmt_int(rec.diagnostics.slot),
                            format_double(rec.diagnostics.decision_distance),
                            format_double(rec.diagnostics.offload_power),
                            format_double(rec.diagnostics.local_power),
                            format_double(rec.diagnostics.snr_used),
                            format_double(rec.buffer_after), fmt_int(rec.diagnostics.arrivals),
                            fmt_int(rec.diagnostics.served_local),
                            fmt_int(rec.diagnostics.served_offload),
                            fmt_int(rec.diagnostics.overflow), format_double(rec.reward)});
            }
            if (channel) {
                // Semicolon-joined per-vehicle lists keep the column count
                // fixed while the active vehicle count varies.
                std::string gains, rhos;
                for (int v = 0; v < max_vehicles_cols; ++v) {
                    const auto i = static_cast<std::size_t>(v);
                    const bool active = i < rec.channel.g_norm_sq.size();
                    gains += (v ? ";" : "") + (active ? format_double(rec.channel.g_norm_sq[i])
                                                      : std::string("0"));
                    rhos += (v ? ";" : "") + (active ? format_double(rec.channel.correlation[i])
                                                     : std::string("0"));
                }
                channel->row({fmt_int(rec.episode + 1), fmt_int(rec.channel.slot), gains, rhos,
                              format_double(rec.channel.target_sinr)});
            }
        });
    return outputs;
}

} // namespace

EvalOutputs run_eval(SimConfig cfg, const std::string& policy, const fs::path& checkpoint,
                     int episodes, std::uint64_t seed, const fs::path& out_dir,
                     bool channel_trace) {
    cfg.scenario.rng_seed = seed;
    validate(cfg);
    if (episodes < 1) throw ConfigError("run_eval: episodes must be >= 1");
    fs::create_directories(out_dir);
    write_manifest({cfg, seed, policy == kPolicyOptimal ? "eval" : "baseline", policy,
                    checkpoint.string(), out_dir.string()});

    EvalOutputs outputs =
        evaluate_policy(cfg, policy, checkpoint, episodes, seed, &out_dir, channel_trace);

    outputs.bins.write_csv(out_dir / "binned.csv");
    json j = summary_to_json(outputs.summary);
    j["policy"] = policy;
    j["seed"] = seed;
    std::ofstream out(out_dir / "summary.json");
    out << j.dump(2) << '\n';
    return outputs;
}

std::vector<CompareRow> run_compare(SimConfig cfg, const fs::path& checkpoint, int episodes,
                                    std::uint64_t seed, const fs::path& out_dir) {
    cfg.scenario.rng_seed = seed;
    validate(cfg);
    fs::create_directories(out_dir);
    write_manifest({cfg, seed, "compare", "", checkpoint.string(), out_dir.string()});

    std::vector<CompareRow> rows;
    for (const char* policy : {kPolicyOptimal, kPolicyGdLocal, kPolicyGdOffload}) {
        CompareRow row;
        row.policy = policy;
        row.summary =
            evaluate_policy(cfg, policy, checkpoint, episodes, seed, nullptr, false).summary;
        rows.push_back(std::move(row));
    }
    const double p_opt = rows[0].summary.mean_total_power;
    for (std::size_t i = 1; i < rows.size(); ++i)
        rows[i].optimal_reduction_pct =
            (1.0 - p_opt / rows[i].summary.mean_total_power) * 100.0;

    CsvWriter csv(out_dir / "compare.csv",
                  {"policy", "avg_total_power_W", "avg_offload_power_W", "avg_local_power_W",
                   "avg_buffer_bits", "avg_slot_reward", "discounted_return", "overflow_total",
                   "optimal_reduction_pct"});
    json jrows = json::array();
    for (const CompareRow& row : rows) {
        csv.row({row.policy, format_double(row.summary.mean_total_power),
                 format_double(row.summary.mean_offload_power),
                 format_double(row.summary.mean_local_power),
                 format_double(row.summary.mean_buffer_bits),
                 format_double(row.summary.mean_slot_reward),
                 format_double(row.summary.mean_discounted_return),
                 fmt_int(row.summary.total_overflow),
                 format_double(row.optimal_reduction_pct)});
        json jr = summary_to_json(row.summary);
        jr["policy"] = row.policy;
        jr["optimal_reduction_pct"] = row.optimal_reduction_pct;
        jrows.push_back(std::move(jr));
    }
    std::ofstream out(out_dir / "compare.json");
    out << jrows.dump(2) << '\n';
    return rows;
}

void export_sweep(SimConfig cfg, const std::vector<double>& arrival_rates,
                  const fs::path& checkpoint, int episodes, std::uint64_t seed,
                  const fs::path& out_dir) {
    if (arrival_rates.empty()) throw ConfigError("export_sweep: need at least one arrival rate");
    cfg.scenario.rng_seed = seed;
    validate(cfg);
    fs::create_directories(out_dir);
    write_manifest({cfg, seed, "sweep", "", checkpoint.string(), out_dir.string()});

    CsvWriter csv(out_dir / "sweep.csv",
                  {"arrival_rate_bps", "policy", "avg_total_power_W", "avg_buffer_bits",
                   "avg_slot_reward", "discounted_return", "overflow_total"});
    for (double rate : arrival_rates) {
        SimConfig rate_cfg = cfg;
        rate_cfg.scenario.arrival_rate = rate;
        validate(rate_cfg);
        for (const char* policy : {kPolicyOptimal, kPolicyGdLocal, kPolicyGdOffload}) {
            const EvalSummary s =
                evaluate_policy(rate_cfg, policy, checkpoint, episodes, seed, nullptr, false)
                    .summary;
            csv.row({format_double(rate), policy, format_double(s.mean_total_power),
                     format_double(s.mean_buffer_bits), format_double(s.mean_slot_reward),
                     format_double(s.mean_discounted_return), fmt_int(s.total_overflow)});
        }
    }
}

} // namespace vecsim
