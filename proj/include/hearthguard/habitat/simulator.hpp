#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hearthguard/gamescore.hpp"
#include "hearthguard/habitat/scenario.hpp"
#include "hearthguard/locator.hpp"
#include "hearthguard/meshbus/broker.hpp"

namespace hearthguard::habitat {

/// Resident position at time t. Before the first waypoint the resident walks
/// from the spawn point; after the last one it stays put.
inline locator::Position interpolate(const Scenario& s, double t) {
    std::vector<Waypoint> path;
    if (s.trajectory.empty() || s.trajectory.front().t > 0.0) path.push_back({0.0, s.spawn.x, s.spawn.y});
    path.insert(path.end(), s.trajectory.begin(), s.trajectory.end());
    if (t <= path.front().t) return {path.front().x, path.front().y, s.wearHeight};
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (t <= path[i].t) {
            const auto& a = path[i - 1];
            const auto& b = path[i];
            const double u = (t - a.t) / (b.t - a.t);
            return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y), s.wearHeight};
        }
    }
    return {path.back().x, path.back().y, s.wearHeight};
}

inline double temperature_baseline(const std::string& room) {
    if (room == "bedroom") return 21.0;
    if (room == "washroom") return 24.0;
    return 22.0;
}

inline double humidity_baseline(const std::string& room) {
    if (room == "bedroom") return 50.0;
    if (room == "washroom") return 65.0;
    return 45.0;
}

/// Scripted home: resident, device fleet and timed events, publishing on a bus.
///
/// Single-owner. Each step first applies the control frames received since the
/// previous step (device activation, relay commands), then emits this tick's
/// frames. Position noise, sensor noise and game sessions draw from separate
/// streams derived from the scenario seed, so switching sensors off does not
/// perturb the resident's position fixes. Gas and flame sensors report on
/// change and then repeat their state every `kSafetyRepeatSeconds`.
class Habitat {
public:
    Habitat(meshbus::Broker& broker, Scenario scenario)
        : s_(std::move(scenario)),
          client_(broker, "habitat"),
          position_rng_(stream_seed(s_.seed, 0)),
          sensor_rng_(stream_seed(s_.seed, 1)),
          game_rng_(stream_seed(s_.seed, 2)) {
        for (const auto& d : s_.devices) {
            active_[d.id] = true;
            if (d.kind == DeviceKind::relay) relay_[d.id] = false;
        }
        client_.subscribe("sys/device/+/active");
        client_.subscribe("home/+/relay/set");
    }

    const Scenario& scenario() const { return s_; }

    static constexpr double kSafetyRepeatSeconds = 5.0;

    void step(double t) {
        apply_control();
        publish_position(t);
        publish_environment(t);
        fire_events(t);
        repeat_safety(t);
        republish_score(t);
    }

    bool active(const std::string& id) const {
        auto it = active_.find(id);
        return it != active_.end() && it->second;
    }
    std::size_t active_count() const {
        std::size_t n = 0;
        for (const auto& [id, on] : active_) n += on;
        return n;
    }
    /// Frames published per device id; "habitat" counts caregiver events.
    const std::map<std::string, std::uint64_t>& emitted() const { return emitted_; }
    bool relay_state(const std::string& id) const { return relay_.at(id); }
    std::optional<gamescore::ScoreReport> last_score() const { return score_; }

private:
    void apply_control() {
        for (const auto& f : client_.drain()) {
            const auto levels = meshbus::split_levels(*f.topic);
            if (levels.size() == 4 && levels[0] == "sys") {
                auto it = active_.find(std::string(levels[2]));
                if (it == active_.end()) continue;
                const auto* d = s_.device(it->first);
                const bool on = f.payload.is_object() ? f.payload.value("active", true) : true;
                it->second = on || d->essential;
            } else if (levels.size() == 4 && levels[0] == "home" && f.payload.is_boolean()) {
                for (const auto& d : s_.devices) {
                    if (d.kind != DeviceKind::relay || d.room != levels[1]) continue;
                    relay_[d.id] = f.payload.get<bool>();
                    if (active(d.id)) publish(d.id, device_topic(d), f.payload);
                }
            }
        }
    }

    void publish_position(double t) {
        const DeviceSpec* tag = find_kind(DeviceKind::tag);
        if (!tag || !active(tag->id)) return;
        const auto truth = interpolate(s_, t);
        const auto ranges = locator::simulate_ranges(truth, s_.anchors, s_.rangeNoise, position_rng_, t);
        locator::SolveOptions opt;
        opt.wearHeight = s_.wearHeight;
        const auto fix = locator::solve_position(ranges, s_.anchors, std::nullopt, opt);
        const auto p = s_.room.clamp(fix.position);
        json payload{{"t", t},
                     {"x", p.x},
                     {"y", p.y},
                     {"z", p.z},
                     {"residual", fix.residualNorm},
                     {"clamped", !(p == fix.position)}};
        publish(tag->id, "user/position", std::move(payload));
    }

    void publish_environment(double) {
        std::normal_distribution<double> unit(0.0, 1.0);
        for (const auto& d : s_.devices) {
            if (!is_environmental(d.kind) || !active(d.id)) continue;
            const double v = d.kind == DeviceKind::temperature ? temperature_baseline(d.room) + 0.2 * unit(sensor_rng_)
                                                               : humidity_baseline(d.room) + 1.0 * unit(sensor_rng_);
            publish(d.id, device_topic(d), v);
        }
    }

    void fire_events(double t) {
        while (next_event_ < s_.events.size() && s_.events[next_event_].t <= t + 1e-9) {
            const auto& ev = s_.events[next_event_++];
            switch (ev.kind) {
                case EventKind::sensor: {
                    const DeviceSpec* d = s_.device(ev.payload.at("device").get<std::string>());
                    if (d->kind == DeviceKind::gas || d->kind == DeviceKind::flame)
                        safety_[d->id] = {ev.payload.at("value").get<bool>(), t};
                    if (active(d->id)) publish(d->id, device_topic(*d), ev.payload.at("value"));
                    break;
                }
                case EventKind::gameScore: {
                    gamescore::ScoreReport r;
                    if (ev.payload.contains("score100")) {
                        r.score100 = ev.payload.at("score100").get<int>();
                        r.points = static_cast<int>(std::lround(r.score100 / 20.0));
                    } else {
                        const int series = gamescore::select_series(series_history_, game_rng_);
                        series_history_.push_back(series);
                        r = gamescore::score_session(
                            gamescore::simulate_player(ev.payload.at("ability").get<double>(), game_rng_, series));
                    }
                    score_ = r;
                    publish_score(t);
                    break;
                }
                case EventKind::caregiverOverride: {
                    if (ev.payload.contains("mode")) {
                        publish("habitat", "care/mode", {{"mode", ev.payload.at("mode")}, {"origin", "caregiver"}});
                    } else if (ev.payload.contains("ruleEdit")) {
                        json edit = ev.payload.at("ruleEdit");
                        edit["origin"] = "caregiver";
                        publish("habitat", "care/rules", std::move(edit));
                    } else {
                        json r = ev.payload.at("reminder");
                        r["origin"] = "caregiver";
                        publish("habitat", "care/reminder", std::move(r));
                    }
                    break;
                }
            }
        }
    }

    void repeat_safety(double t) {
        for (auto& [id, st] : safety_) {
            if (t - st.last < kSafetyRepeatSeconds - 1e-9) continue;
            st.last = t;
            const DeviceSpec* d = s_.device(id);
            if (active(id)) publish(id, device_topic(*d), st.value);
        }
    }

    void publish_score(double t) {
        json payload = gamescore::to_json(*score_);
        payload["t"] = t;
        const DeviceSpec* tag = find_kind(DeviceKind::tag);
        publish(tag ? tag->id : "habitat", gamescore::kScoreTopic, std::move(payload), true);
        last_score_publish_ = t;
    }

    void republish_score(double t) {
        if (score_ && t - last_score_publish_ >= s_.scoreRepublishSeconds - 1e-9) publish_score(t);
    }

    const DeviceSpec* find_kind(DeviceKind k) const {
        for (const auto& d : s_.devices)
            if (d.kind == k) return &d;
        return nullptr;
    }

    void publish(const std::string& device, const std::string& topic, json payload, bool retain = false) {
        ++emitted_[device];
        client_.publish(topic, std::move(payload), retain);
    }

    Scenario s_;
    meshbus::LocalClient client_;
    struct SafetyState {
        bool value = false;
        double last = 0.0;
    };

    static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
        return seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    }

    std::mt19937_64 position_rng_;
    std::mt19937_64 sensor_rng_;
    std::mt19937_64 game_rng_;
    std::map<std::string, SafetyState> safety_;
    std::map<std::string, bool> active_;
    std::map<std::string, bool> relay_;
    std::map<std::string, std::uint64_t> emitted_;
    std::size_t next_event_ = 0;
    std::optional<gamescore::ScoreReport> score_;
    std::vector<int> series_history_;
    double last_score_publish_ = 0.0;
};

}  // namespace hearthguard::habitat
