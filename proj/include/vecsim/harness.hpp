#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecsim/ddpg.hpp"
#include "vecsim/scenario.hpp"

namespace vecsim {

// Everything a run needs: the physical scenario, the learner, and which lane
// the controlled vehicle drives on.
struct SimConfig {
    ScenarioConfig scenario;
    AgentConfig agent;
    int target_lane = 2;
};

void validate(const SimConfig& cfg);

nlohmann::json to_json(const SimConfig& cfg);
SimConfig config_from_json(const nlohmann::json& j);

// Parse a JSON config file.  Unknown keys are startup errors listing the
// offenders; absent keys keep their defaults.
SimConfig load_config(const std::filesystem::path& path);

struct RunManifest {
    SimConfig config;
    std::uint64_t seed = 0;
    std::string mode;        // train | eval | baseline | compare | sweep
    std::string policy;      // optimal | gd-local | gd-offload | (empty)
    std::string checkpoint;  // path used, if any
    std::string out_dir;
};

// Written to <out_dir>/manifest.json before the run starts.
void write_manifest(const RunManifest& manifest);

// Per-distance-bin means across [-coverage/2, coverage/2].
class DistanceBinnedSeries {
public:
    DistanceBinnedSeries(int bins, double coverage);

    void add(double distance, double offload_power, double local_power, double buffer_bits,
             double reward);
    int bins() const { return static_cast<int>(count_.size()); }
    double bin_center(int i) const;
    std::int64_t samples(int i) const { return count_[static_cast<std::size_t>(i)]; }
    double mean_offload_power(int i) const;
    double mean_local_power(int i) const;
    double mean_buffer_bits(int i) const;
    double mean_reward(int i) const;
    void write_csv(const std::filesystem::path& path) const;

private:
    double coverage_;
    std::vector<std::int64_t> count_;
    std::vector<double> sum_offload_, sum_local_, sum_buffer_, sum_reward_;
};

// Shortest-exact decimal formatting used in every CSV cell.
std::string format_double(double value);

extern const char* const kPolicyOptimal;    // "optimal"
extern const char* const kPolicyGdLocal;    // "gd-local"
extern const char* const kPolicyGdOffload;  // "gd-offload"

struct TrainOutputs {
    std::filesystem::path checkpoint;  // final parameter file
    std::vector<double> learning_curve;
    std::int64_t gradient_updates = 0;
};

// Trains on the configured lane and writes manifest.json,
// learning_curve.csv and checkpoint.bin (plus periodic checkpoints when
// configured) under out_dir.  episodes_override > 0 replaces the configured
// episode count.  On divergence a diagnostic checkpoint is written before
// the error propagates.
TrainOutputs run_train(SimConfig cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
                       int episodes_override = 0);

struct EvalOutputs {
    EvalSummary summary;
    DistanceBinnedSeries bins;
};

// Evaluates one policy and writes manifest.json, summary.json, binned.csv
// and trace.csv (optionally channel_trace.csv).  Episode k runs on its own
// seed derived from (seed, k), so different policies under the same seed see
// identical task arrivals and fading.
EvalOutputs run_eval(SimConfig cfg, const std::string& policy,
                     const std::filesystem::path& checkpoint, int episodes, std::uint64_t seed,
                     const std::filesystem::path& out_dir, bool channel_trace = false);

struct CompareRow {
    std::string policy;
    EvalSummary summary;
    double optimal_reduction_pct = 0.0;  // power cut of `optimal` vs. this row
};

// Evaluates optimal and both greedy baselines on identical episodes and
// writes compare.csv / compare.json.
std::vector<CompareRow> run_compare(SimConfig cfg, const std::filesystem::path& checkpoint,
                                    int episodes, std::uint64_t seed,
                                    const std::filesystem::path& out_dir);

// Re-evaluates all three policies at each arrival rate (shared checkpoint)
// and writes sweep.csv.
void export_sweep(SimConfig cfg, const std::vector<double>& arrival_rates,
                  const std::filesystem::path& checkpoint, int episodes, std::uint64_t seed,
                  const std::filesystem::path& out_dir);

} // namespace vecsim
