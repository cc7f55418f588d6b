#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hearthguard/analytics.hpp"
#include "hearthguard/conductor.hpp"
#include "hearthguard/habitat.hpp"
#include "hearthguard/meshbus/broker.hpp"

namespace hearthguard::runtime {

using nlohmann::json;

inline constexpr const char* kFrameLogFormat = "hearthguard-frames";
inline constexpr std::uint64_t kLossSeedSalt = 0x9E3779B97F4A7C15ull;

struct RunOptions {
    conductor::ModePolicy policy = conductor::ModePolicy::adaptive;
    std::optional<std::uint64_t> seed;  // replaces every scenario seed
    std::ostream* frameLog = nullptr;   // JSONL; one line per publish
    /// Wall-clock seconds per simulated second; 0 runs as fast as possible.
    double pace = 0.0;
    const std::atomic<bool>* stop = nullptr;
    /// Called once the run's broker exists, e.g. to expose it over TCP.
    std::function<void(meshbus::Broker&)> onBroker;
    /// Called after every tick.
    std::function<void(const conductor::Conductor&, const habitat::Habitat&, double)> onTick;
};

struct RunResult {
    analytics::RunLog log;
    conductor::RunMetrics metrics;
    std::vector<std::string> warnings;
    meshbus::BrokerStats stats;
    int finalActiveDevices = 0;
    bool interrupted = false;
};

inline json frame_log_header(const std::string& suite, conductor::ModePolicy policy, std::optional<std::uint64_t> seed) {
    json h{{"format", kFrameLogFormat}, {"version", 1}, {"suite", suite}, {"mode", conductor::to_string(policy)}};
    h["seed"] = seed ? json(*seed) : json(nullptr);
    return h;
}

/// Runs one scenario in lockstep: habitat step, then conductor tick, per tick.
inline RunResult run_scenario(const habitat::Scenario& scenario_in, const fuzzy::RuleBase& base,
                              const RunOptions& opt = {}) {
    habitat::Scenario scenario = scenario_in;
    if (opt.seed) scenario.seed = *opt.seed;

    meshbus::Broker broker(scenario.seed ^ kLossSeedSalt);
    meshbus::LossModel loss;
    loss.baseProbability = scenario.lossProbability;
    loss.maxDevices = static_cast<int>(scenario.devices.size());
    loss.activeDevices = loss.maxDevices;
    broker.set_loss_model(loss);

    std::size_t tick = 0;
    double now = 0.0;
    if (opt.frameLog) {
        std::ostream& out = *opt.frameLog;
        const std::string run = scenario.name;
        broker.set_tap([&out, &tick, &now, run](const meshbus::Frame& f, bool dropped) {
            json line{{"run", run}, {"tick", tick}, {"t", now}, {"dropped", dropped}, {"frame", meshbus::to_json(f)}};
            out << line.dump() << '\n';
        });
    }
    if (opt.onBroker) opt.onBroker(broker);

    fuzzy::RuleStore store(habitat::scenario_rule_base(base, scenario));
    habitat::Habitat home(broker, scenario);
    conductor::Conductor brain(broker, store, conductor::config_for(scenario, opt.policy));

    RunResult result;
    const std::size_t n = scenario.tick_count();
    const auto started = std::chrono::steady_clock::now();
    for (tick = 0; tick < n; ++tick) {
        if (opt.stop && opt.stop->load()) {
            result.interrupted = true;
            break;
        }
        now = scenario.time_of_tick(tick);
        if (opt.pace > 0.0)
            std::this_thread::sleep_until(started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                        std::chrono::duration<double>(now * opt.pace)));
        home.step(now);
        brain.tick(now);
        if (opt.onTick) opt.onTick(brain, home, now);
    }
    broker.set_tap({});

    result.log = brain.run_log();
    result.metrics = brain.metrics();
    result.warnings = brain.warnings();
    result.stats = broker.stats();
    result.finalActiveDevices = static_cast<int>(brain.registry().active_count());
    return result;
}

inline std::vector<RunResult> run_suite(const habitat::ScenarioSuite& suite, const fuzzy::RuleBase& base,
                                        const RunOptions& opt = {}) {
    if (opt.frameLog) *opt.frameLog << frame_log_header(suite.name, opt.policy, opt.seed).dump() << '\n';
    std::vector<RunResult> out;
    for (const auto& s : suite.runs) {
        out.push_back(run_scenario(s, base, opt));
        if (out.back().interrupted) break;
    }
    return out;
}

inline std::vector<analytics::MetricsRow> metrics_rows(const std::vector<RunResult>& results) {
    std::vector<analytics::RunLog> logs;
    for (const auto& r : results) logs.push_back(r.log);
    return analytics::aggregate_run_metrics(logs);
}

/// Per-run counts reconstructed from a frame log.
struct ReplayRun {
    std::string name;
    long frames = 0;
    long dropped = 0;
    long reminders = 0;  // conductor care/reminder frames carrying a voice or image
    long alarms = 0;     // alert/* frames
    std::vector<int> voiceIds;
    std::vector<int> imageIds;
    std::map<std::string, long> topics;  // delivered frames per topic
};

struct ReplaySummary {
    json header;
    std::vector<ReplayRun> runs;
};

inline ReplaySummary replay_frame_log(std::istream& in) {
    ReplaySummary out;
    std::string line;
    std::size_t lineno = 0;
    auto note = [](std::vector<int>& ids, const json& p, const char* key) {
        if (!p.is_object() || !p.contains(key) || !p.at(key).is_number_integer()) return;
        const int id = p.at(key).get<int>();
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(lineno), e.what());
        }
        if (lineno == 1) {
            if (j.value("format", "") != kFrameLogFormat) throw ParseError("line 1", "not a frame log header");
            out.header = j;
            continue;
        }
        const std::string run = j.value("run", "");
        if (out.runs.empty() || out.runs.back().name != run) {
            ReplayRun fresh;
            fresh.name = run;
            out.runs.push_back(std::move(fresh));
        }
        ReplayRun& r = out.runs.back();
        ++r.frames;
        if (j.value("dropped", false)) {
            ++r.dropped;
            continue;
        }
        const meshbus::Frame f = meshbus::frame_from_json(j.at("frame"));
        const std::string& topic = *f.topic;
        ++r.topics[topic];
        const bool conductor_reminder = topic == "care/reminder" && f.payload.is_object() &&
                                        f.payload.contains("rule") &&
                                        (f.payload.contains("voice") || f.payload.contains("image"));
        const bool alarm = topic.rfind("alert/", 0) == 0;
        if (conductor_reminder) ++r.reminders;
        if (alarm) ++r.alarms;
        if (conductor_reminder || alarm) {
            note(r.voiceIds, f.payload, "voice");
            note(r.imageIds, f.payload, "image");
        }
    }
    if (lineno == 0) throw ParseError("line 1", "empty frame log");
    return out;
}

}  // namespace hearthguard::runtime
