#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vecsim/errors.hpp"
#include "vecsim/harness.hpp"
#include "vecsim/neural.hpp"

namespace fs = std::filesystem;
using vecsim::DistanceBinnedSeries;
using vecsim::SimConfig;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "vecsim_test_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    return lines;
}

// Short episodes and tiny networks keep harness runs fast.
SimConfig tiny_config() {
    SimConfig cfg;
    cfg.scenario.coverage = 20.0; // 40 slots on lane 2
    cfg.agent.hidden1 = 8;
    cfg.agent.hidden2 = 6;
    cfg.agent.batch_size = 4;
    cfg.agent.replay_capacity = 256;
    cfg.agent.eval_episodes = 2;
    return cfg;
}

} // namespace

TEST_CASE("config serialization round-trips") {
    SimConfig cfg = tiny_config();
    cfg.scenario.arrival_rate = 2.5e6;
    cfg.scenario.lane_velocities = {18.0, 22.0, 33.0};
    cfg.agent.actor_lr = 5e-5;
    cfg.target_lane = 3;
    const SimConfig back = vecsim::config_from_json(vecsim::to_json(cfg));
    CHECK(back.scenario.arrival_rate == cfg.scenario.arrival_rate);
    CHECK(back.scenario.lane_velocities == cfg.scenario.lane_velocities);
    CHECK(back.scenario.coverage == cfg.scenario.coverage);
    CHECK(back.agent.actor_lr == cfg.agent.actor_lr);
    CHECK(back.agent.hidden1 == cfg.agent.hidden1);
    CHECK(back.target_lane == cfg.target_lane);
}

TEST_CASE("absent config keys keep their defaults") {
    const auto j = nlohmann::json::parse(R"({"scenario": {"bandwidth": 2e6}})");
    const SimConfig cfg = vecsim::config_from_json(j);
    CHECK(cfg.scenario.bandwidth == 2e6);
    CHECK(cfg.scenario.num_antennas == 4);
    CHECK(cfg.agent.batch_size == 64);
    CHECK(cfg.target_lane == 2);
}

TEST_CASE("unknown config keys are startup errors that name the offender") {
    const auto j = nlohmann::json::parse(
        R"({"scenario": {"bandwidth": 2e6, "bandwith": 1e6}, "agent": {}})");
    try {
        vecsim::config_from_json(j);
        FAIL("expected ConfigError");
    } catch (const vecsim::ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bandwith") != std::string::npos);
        CHECK(msg.find("scenario") != std::string::npos);
    }
    const auto top = nlohmann::json::parse(R"({"scenari": {}})");
    CHECK_THROWS_AS(vecsim::config_from_json(top), vecsim::ConfigError);
}

TEST_CASE("config files with broken JSON or missing path are rejected") {
    const fs::path dir = scratch_dir("load_config");
    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(vecsim::load_config(bad), vecsim::ConfigError);
    CHECK_THROWS_AS(vecsim::load_config(dir / "missing.json"), vecsim::ConfigError);
}

TEST_CASE("simulation config validation covers the lane choice") {
    SimConfig cfg = tiny_config();
    cfg.target_lane = 0;
    CHECK_THROWS_AS(vecsim::validate(cfg), vecsim::ConfigError);
    cfg.target_lane = 4;
    CHECK_THROWS_AS(vecsim::validate(cfg), vecsim::ConfigError);
}

TEST_CASE("CSV cells round-trip doubles exactly") {
    for (double v : {0.1, 1.0 / 3.0, -0.0, 2.5e-300, 1.7976931348623157e308,
                     86177.387601275349, -99.995682875258934}) {
        const std::string s = vecsim::format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("distance bins clamp to the coverage and average their samples") {
    DistanceBinnedSeries bins(50, 500.0);
    CHECK(bins.bins() == 50);
    CHECK(bins.bin_center(0) == doctest::Approx(-245.0));
    CHECK(bins.bin_center(49) == doctest::Approx(245.0));
    CHECK(bins.bin_center(25) == doctest::Approx(5.0));

    bins.add(-249.9, 1.0, 0.5, 1000.0, -1.0);
    bins.add(-240.1, 0.0, 0.1, 3000.0, -2.0);
    CHECK(bins.samples(0) == 2);
    CHECK(bins.mean_offload_power(0) == doctest::Approx(0.5));
    CHECK(bins.mean_local_power(0) == doctest::Approx(0.3));
    CHECK(bins.mean_buffer_bits(0) == doctest::Approx(2000.0));
    CHECK(bins.mean_reward(0) == doctest::Approx(-1.5));

    // Out-of-range samples land in the edge bins instead of vanishing.
    bins.add(-600.0, 1.0, 1.0, 0.0, 0.0);
    CHECK(bins.samples(0) == 3);
    bins.add(600.0, 1.0, 1.0, 0.0, 0.0);
    CHECK(bins.samples(49) == 1);
    // Empty bins report zero means.
    CHECK(bins.mean_offload_power(10) == 0.0);

    const fs::path dir = scratch_dir("bins");
    bins.write_csv(dir / "binned.csv");
    const std::string text = slurp(dir / "binned.csv");
    CHECK(line_count(text) == 51); // header + 50 bins
    CHECK(text.find("bin_center_m") == 0);
}

TEST_CASE("training writes manifest, curve and loadable checkpoint") {
    const fs::path dir = scratch_dir("train");
    const SimConfig cfg = tiny_config();
    const auto outputs = vecsim::run_train(cfg, 12345, dir, 3);

    CHECK(outputs.learning_curve.size() == 3);
    CHECK(outputs.gradient_updates > 0);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "learning_curve.csv"));
    CHECK(fs::exists(dir / "checkpoint.bin"));

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("mode") == "train");
    CHECK(manifest.at("seed") == 12345);
    CHECK(manifest.at("config").at("scenario").at("rng_seed") == 12345);

    const std::string curve = slurp(dir / "learning_curve.csv");
    CHECK(line_count(curve) == 4); // header + one row per episode
    CHECK(curve.rfind("episode,mean_slot_reward", 0) == 0);

    const auto nets = vecsim::load_checkpoint(dir / "checkpoint.bin");
    CHECK(nets.count("actor") == 1);
    CHECK(nets.count("critic") == 1);
    CHECK(nets.at("actor").layer_sizes == std::vector<int>{3, 8, 6, 2});
}

TEST_CASE("periodic checkpoints appear at the configured cadence") {
    const fs::path dir = scratch_dir("train_periodic");
    SimConfig cfg = tiny_config();
    cfg.agent.checkpoint_every = 2;
    vecsim::run_train(cfg, 5, dir, 4);
    CHECK(fs::exists(dir / "checkpoint_ep000002.bin"));
    CHECK(fs::exists(dir / "checkpoint_ep000004.bin"));
    CHECK(!fs::exists(dir / "checkpoint_ep000003.bin"));
}

TEST_CASE("identical train runs produce byte-identical learning curves") {
    const fs::path a = scratch_dir("train_a");
    const fs::path b = scratch_dir("train_b");
    const SimConfig cfg = tiny_config();
    vecsim::run_train(cfg, 777, a, 3);
    vecsim::run_train(cfg, 777, b, 3);
    CHECK(slurp(a / "learning_curve.csv") == slurp(b / "learning_curve.csv"));
    CHECK(slurp(a / "checkpoint.bin") == slurp(b / "checkpoint.bin"));
}

TEST_CASE("evaluation writes summary, bins and trace") {
    const fs::path train_dir = scratch_dir("eval_train");
    const SimConfig cfg = tiny_config();
    const auto trained = vecsim::run_train(cfg, 99, train_dir, 2);

    const fs::path dir = scratch_dir("eval");
    const auto outputs =
        vecsim::run_eval(cfg, "optimal", trained.checkpoint, 2, 4242, dir, true);
    CHECK(outputs.summary.episodes == 2);
    CHECK(outputs.summary.slots == 80); // 2 episodes x 40 slots
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "binned.csv"));
    CHECK(fs::exists(dir / "trace.csv"));
    CHECK(fs::exists(dir / "channel_trace.csv"));

    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary.at("episodes") == 2);
    CHECK(summary.at("policy") == "optimal");
    CHECK(summary.at("avg_total_power_W").get<double>() >= 0.0);
    CHECK(summary.at("avg_total_power_W").get<double>() ==
          doctest::Approx(summary.at("avg_offload_power_W").get<double>() +
                          summary.at("avg_local_power_W").get<double>()));

    const std::string trace = slurp(dir / "trace.csv");
    CHECK(line_count(trace) == 81); // header + one row per slot
    CHECK(trace.rfind("episode,slot,d_m,p_o,p_l,gamma,B_bits,arrivals,d_local,d_offload,"
                      "overflow,reward",
                      0) == 0);
    const std::string chan = slurp(dir / "channel_trace.csv");
    CHECK(line_count(chan) == 81);
    // Per-vehicle lists are semicolon-joined within one CSV cell.
    CHECK(chan.find(';') != std::string::npos);
}

TEST_CASE("the learned policy id requires a checkpoint") {
    const fs::path dir = scratch_dir("eval_nockpt");
    CHECK_THROWS_AS(vecsim::run_eval(tiny_config(), "optimal", "", 1, 1, dir),
                    vecsim::ConfigError);
    CHECK_THROWS_AS(
        vecsim::run_eval(tiny_config(), "optimal", dir / "missing.bin", 1, 1, dir),
        vecsim::ConfigError);
    CHECK_THROWS_AS(vecsim::run_eval(tiny_config(), "nonsense", "", 1, 1, dir),
                    vecsim::ConfigError);
}

TEST_CASE("baseline evaluation runs without a checkpoint") {
    const fs::path dir = scratch_dir("eval_baseline");
    const auto outputs = vecsim::run_eval(tiny_config(), "gd-local", "", 2, 31, dir);
    CHECK(outputs.summary.slots == 80);
    // Local-first greedy pins the CPU at full power.
    CHECK(outputs.summary.mean_local_power == doctest::Approx(1.0));
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("mode") == "baseline");
}

TEST_CASE("policies are compared on identical episodes") {
    const fs::path train_dir = scratch_dir("compare_train");
    const SimConfig cfg = tiny_config();
    const auto trained = vecsim::run_train(cfg, 7, train_dir, 2);

    const fs::path dir = scratch_dir("compare");
    const auto rows = vecsim::run_compare(cfg, trained.checkpoint, 2, 555, dir);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].policy == "optimal");
    CHECK(rows[1].policy == "gd-local");
    CHECK(rows[2].policy == "gd-offload");
    CHECK(rows[0].optimal_reduction_pct == 0.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double expect =
            (1.0 - rows[0].summary.mean_total_power / rows[i].summary.mean_total_power) * 100.0;
        CHECK(rows[i].optimal_reduction_pct == doctest::Approx(expect));
    }
    CHECK(fs::exists(dir / "compare.csv"));
    CHECK(fs::exists(dir / "compare.json"));
    const std::string csv = slurp(dir / "compare.csv");
    CHECK(line_count(csv) == 4);

    // Same seed, same environments: a rerun reproduces the numbers exactly.
    const fs::path dir2 = scratch_dir("compare2");
    const auto rows2 = vecsim::run_compare(cfg, trained.checkpoint, 2, 555, dir2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].summary.mean_total_power == rows2[i].summary.mean_total_power);
        CHECK(rows[i].summary.mean_slot_reward == rows2[i].summary.mean_slot_reward);
    }
}

TEST_CASE("arrival-rate sweeps cover every rate-policy pair") {
    const fs::path train_dir = scratch_dir("sweep_train");
    const SimConfig cfg = tiny_config();
    const auto trained = vecsim::run_train(cfg, 3, train_dir, 2);

    const fs::path dir = scratch_dir("sweep");
    vecsim::export_sweep(cfg, {1e6, 3e6}, trained.checkpoint, 1, 21, dir);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(line_count(csv) == 7); // header + 2 rates x 3 policies
    CHECK(csv.find("gd-offload") != std::string::npos);
    CHECK(csv.find("1000000") != std::string::npos);

    // A non-positive rate in the sweep list is rejected up front.
    CHECK_THROWS_AS(vecsim::export_sweep(cfg, {-1.0}, trained.checkpoint, 1, 21, dir),
                    vecsim::ConfigError);
    CHECK_THROWS_AS(vecsim::export_sweep(cfg, {}, trained.checkpoint, 1, 21, dir),
                    vecsim::ConfigError);
}
