#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hearthguard/analytics.hpp"
#include "hearthguard/conductor/mode.hpp"
#include "hearthguard/fuzzy/engine.hpp"
#include "hearthguard/fuzzy/rule_store.hpp"
#include "hearthguard/fuzzy/rulebase_json.hpp"
#include "hearthguard/gamescore.hpp"
#include "hearthguard/habitat/scenario.hpp"
#include "hearthguard/locator.hpp"
#include "hearthguard/meshbus/broker.hpp"

namespace hearthguard::conductor {

using nlohmann::json;

struct ConductorConfig {
    std::string scenario = "scenario";
    ModePolicy policy = ModePolicy::adaptive;
    double startHour = 8.0;
    double tickInterval = 1.0;
    locator::ObjectRegistry objects = locator::default_objects();
    std::vector<locator::Zone> zones = locator::default_zones();
    double zoneBand = locator::kZoneNearBand;
    double initialMovementHours = 0.0;
    double movementSampleSeconds = 5.0;
    double speedThreshold = 0.2;
    int freshnessTicks = 30;
    double theta = fuzzy::kDefaultActivationThreshold;
    int hysteresis = 3;
    std::string relayRoom = "kitchen";
    std::vector<habitat::DeviceSpec> devices = habitat::default_fleet();
};

inline ConductorConfig config_for(const habitat::Scenario& s, ModePolicy policy) {
    ConductorConfig c;
    c.scenario = s.name;
    c.policy = policy;
    c.startHour = s.startHour;
    c.tickInterval = s.tickInterval;
    c.objects = s.objects;
    c.zones = s.zones;
    c.initialMovementHours = s.initialMovementHours;
    c.devices = s.devices;
    return c;
}

struct RunMetrics {
    long reminderCount = 0;
    long alarmCount = 0;
    long droppedMessages = 0;
    double deviceActiveSeconds = 0.0;
    std::map<std::string, long> perRuleFireCounts;  // rising edges
};

/// Tick-driven orchestrator.
///
/// Frames arrive in a mailbox and are folded into the input state at the start
/// of each tick. Messages are edge-triggered: a frame goes out when an output
/// becomes active, not on every tick it stays active. Zone, gas and flame alerts
/// bypass semi-automated suppression.
class Conductor {
public:
    Conductor(meshbus::Broker& broker, fuzzy::RuleStore& store, ConductorConfig cfg)
        : broker_(broker),
          store_(store),
          cfg_(std::move(cfg)),
          client_(broker, "conductor"),
          ledger_(cfg_.speedThreshold, cfg_.startHour * 3600.0, cfg_.initialMovementHours),
          controller_(cfg_.policy == ModePolicy::semiAutomated ? Mode::semiAutomated : Mode::automated,
                      cfg_.hysteresis),
          registry_(make_registry(cfg_.devices)) {
        for (const auto& d : cfg_.devices) kinds_[d.id] = d;
        for (const char* f : {"user/#", "home/#", "care/rules", "care/mode"}) client_.subscribe(f);
        registry_ = apply_registry_mode(registry_, mode()).registry;
        registry_mode_ = mode();
        for (const auto& d : registry_.devices) publish_frame(device_active_frame(d));
        broker_.set_active_devices(static_cast<int>(registry_.active_count()));
    }

    Mode mode() const { return controller_.mode(); }
    const DeviceRegistry& registry() const { return registry_; }
    const RunMetrics& metrics() const { return metrics_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const std::vector<analytics::RunEvent>& events() const { return events_; }
    double movement_hours() const { return ledger_.hours(); }
    std::optional<int> game_score() const { return score_; }
    const fuzzy::DecisionOutput& last_decision() const { return decision_; }
    std::uint64_t ticks() const { return tick_; }

    void tick(double t) {
        ++tick_;
        now_ = t;
        for (const auto& f : client_.drain()) ingest(f);
        update_movement();
        const Mode before = registry_mode_;
        if (mode() != before) apply_mode(mode());

        const auto snap = store_.snapshot();
        const auto& base = *snap.base;
        auto strengths = fuzzy::firing_strengths(base, fuzzy::fuzzify(base.variables, snapshot(base, t)));
        // Muted before selection so a suppressed reminder cannot mask an alert.
        if (mode() == Mode::semiAutomated)
            for (std::size_t i = 0; i < base.rules.size(); ++i)
                if (suppressed(base.rules[i])) strengths[i] = 0.0;
        decision_ = fuzzy::select_outputs(base, strengths, cfg_.theta);
        count_fires();
        dispatch(*snap.base, t);
        check_freshness();

        metrics_.deviceActiveSeconds += static_cast<double>(registry_.active_count()) * cfg_.tickInterval;
        metrics_.droppedMessages = static_cast<long>(broker_.stats().dropped);
    }

    /// Crisp inputs for time t from the latest known values.
    fuzzy::CrispInputSnapshot snapshot(const fuzzy::RuleBase& base, double t) const {
        fuzzy::CrispInputSnapshot s;
        s.timestamp = t;
        auto put = [&](const std::string& name, double v) {
            if (base.variables.find(name)) s.set(name, v);
        };
        put("time", std::fmod(cfg_.startHour + t / 3600.0, 24.0));
        put("movement", ledger_.hours());
        if (score_) put(kScoreVariable, *score_);
        if (auto v = average("temperature")) put("temperature", *v);
        if (auto v = average("humidity")) put("humidity", *v);
        if (auto v = any_true("gas")) put("gas", *v ? 1.0 : 0.0);
        if (auto v = any_true("flame")) put("flame", *v ? 1.0 : 0.0);
        if (position_)
            for (const auto& [id, p] : cfg_.objects.all()) put("distance." + id, locator::distance(*position_, p));
        return s;
    }

    analytics::RunLog run_log() const {
        analytics::RunLog log;
        log.scenario = cfg_.scenario;
        log.mode = to_string(cfg_.policy);
        log.gameScore = score_.value_or(0);
        log.events = events_;
        log.droppedMessages = metrics_.droppedMessages;
        log.activeDeviceSeconds = metrics_.deviceActiveSeconds;
        log.movementHours = ledger_.hours();
        log.activeDevices = static_cast<int>(registry_.active_count());
        return log;
    }

private:
    struct Reading {
        json value;
        std::uint64_t tick = 0;
    };

    void ingest(const meshbus::Frame& f) {
        const std::string& topic = *f.topic;
        const auto levels = meshbus::split_levels(topic);
        try {
            if (topic == "user/position") {
                position_ = locator::Position{f.payload.at("x").get<double>(), f.payload.at("y").get<double>(),
                                              f.payload.at("z").get<double>()};
                position_t_ = f.payload.value("t", now_);
                seen_["user/position"] = tick_;
            } else if (topic == gamescore::kScoreTopic) {
                score_ = f.payload.at("score100").get<int>();
                seen_[topic] = tick_;
                if (cfg_.policy == ModePolicy::adaptive) controller_.observe(*store_.current(), *score_);
            } else if (topic == "care/mode") {
                const json& m = f.payload.is_object() ? f.payload.value("mode", json()) : f.payload;
                if (m.is_null()) {
                    controller_.set_override(std::nullopt);
                } else if (auto mm = mode_from_string(m.get<std::string>())) {
                    controller_.set_override(*mm);
                } else {
                    warn("BadFrame: care/mode '" + m.dump() + "'");
                }
            } else if (topic == "care/rules") {
                store_.apply(fuzzy::rule_edit_from_json(f.payload));
            } else if (levels.size() == 3 && levels[0] == "home") {
                readings_[topic] = {f.payload, tick_};
                seen_[topic] = tick_;
            }
        } catch (const std::exception& e) {
            warn(std::string(topic == "care/rules" ? "RuleEditRejected: " : "BadFrame: ") + topic + ": " + e.what());
        }
    }

    void update_movement() {
        if (!position_) return;
        const auto last = ledger_.last();
        if (last && position_t_ - last->timestamp < cfg_.movementSampleSeconds - 1e-9) return;
        if (last && !(position_t_ > last->timestamp)) return;
        ledger_.add(*position_, position_t_);
        client_.publish("user/movement", {{"hours", ledger_.hours()}, {"t", position_t_}}, true);
    }

    void apply_mode(Mode m) {
        auto up = apply_registry_mode(registry_, m);
        registry_ = std::move(up.registry);
        registry_mode_ = m;
        for (auto& f : up.frames) publish_frame(std::move(f));
        broker_.set_active_devices(static_cast<int>(registry_.active_count()));
    }

    std::optional<double> average(const std::string& kind) const {
        double sum = 0.0;
        int n = 0;
        for (const auto& [topic, r] : readings_) {
            if (!ends_with(topic, "/" + kind) || !r.value.is_number()) continue;
            sum += r.value.get<double>();
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    }

    std::optional<bool> any_true(const std::string& kind) const {
        std::optional<bool> out;
        for (const auto& [topic, r] : readings_) {
            if (!ends_with(topic, "/" + kind) || !r.value.is_boolean()) continue;
            out = out.value_or(false) || r.value.get<bool>();
        }
        return out;
    }

    static bool ends_with(const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    }

    void count_fires() {
        std::set<std::string> now;
        for (const auto& r : decision_.firedRules) {
            now.insert(r.id);
            if (!fired_.count(r.id)) ++metrics_.perRuleFireCounts[r.id];
        }
        fired_ = std::move(now);
    }

    static bool suppressed(const fuzzy::Rule& r) {
        return r.category == fuzzy::Category::reminder && r.origin != fuzzy::Origin::caregiver;
    }

    static std::string alert_kind(const fuzzy::Rule& r) {
        if (r.antecedents.empty()) return "rule";
        const std::string& v = r.antecedents.front().variable;
        return v.substr(0, v.find('.'));
    }

    void dispatch(const fuzzy::RuleBase& base, double t) {
        // Group the winning voice and image by rule.
        std::map<std::string, std::pair<std::optional<int>, std::optional<int>>> groups;
        if (decision_.voiceRuleId) groups[*decision_.voiceRuleId].first = decision_.voiceMessageId;
        if (decision_.imageRuleId) groups[*decision_.imageRuleId].second = decision_.imageMessageId;

        std::set<std::string> keys;
        for (const auto& [id, ids] : groups) {
            const fuzzy::Rule* r = base.find(id);
            if (!r) continue;
            const bool alert = r->category == fuzzy::Category::alert;
            const bool caregiver = r->origin == fuzzy::Origin::caregiver;
            const std::string key = id + "|" + std::to_string(ids.first.value_or(0)) + "|" +
                                    std::to_string(ids.second.value_or(0));
            keys.insert(key);
            if (active_keys_.count(key)) continue;
            json payload{{"rule", id}, {"origin", caregiver ? "caregiver" : "builtin"}, {"t", t}};
            if (ids.first) payload["voice"] = *ids.first;
            if (ids.second) payload["image"] = *ids.second;
            if (alert) {
                payload["kind"] = alert_kind(*r);
                client_.publish("alert/" + alert_kind(*r), payload);
                record("alarm", t, ids.first, ids.second, id);
            } else {
                client_.publish("care/reminder", payload);
                record("reminder", t, ids.first, ids.second, id);
            }
        }
        active_keys_ = std::move(keys);

        if (decision_.relayStatus) {
            if (relay_ != decision_.relayStatus)
                client_.publish("home/" + cfg_.relayRoom + "/relay/set", *decision_.relayStatus);
        }
        relay_ = decision_.relayStatus;

        const bool game = decision_.gameStart.value_or(false);
        if (game && !game_) {
            client_.publish("care/reminder", {{"game", "Start"}, {"origin", "builtin"}, {"t", t}});
            record("command", t, std::nullopt, std::nullopt, "");
        }
        game_ = game;

        std::optional<int> zone;
        if (position_) {
            if (auto z = locator::zone_check(*position_, cfg_.zones, cfg_.zoneBand)) {
                zone = z->id;
                if (zone != zone_) {
                    client_.publish("alert/zone", {{"kind", "zone"}, {"zone", z->id}, {"image", z->imageMessageId}, {"t", t}});
                    record("alarm", t, std::nullopt, z->imageMessageId, "zone." + std::to_string(z->id));
                }
            }
        }
        zone_ = zone;

        const bool flame = any_true("flame").value_or(false);
        if (flame && !flame_) {
            client_.publish("alert/flame", {{"kind", "flame"}, {"t", t}});
            record("alarm", t, std::nullopt, std::nullopt, "flame");
        }
        flame_ = flame;
    }

    void record(const std::string& kind, double t, std::optional<int> voice, std::optional<int> image,
                const std::string& rule) {
        events_.push_back({t, kind, voice.value_or(0), image.value_or(0), rule});
        if (kind == "reminder") ++metrics_.reminderCount;
        if (kind == "alarm") ++metrics_.alarmCount;
    }

    /// Periodic sources: the position fix and every active environmental sensor.
    void check_freshness() {
        std::set<std::string> sources{"user/position"};
        for (const auto& d : registry_.devices) {
            if (!d.active) continue;
            const auto& spec = kinds_.at(d.id);
            if (habitat::is_environmental(spec.kind)) sources.insert(habitat::device_topic(spec));
        }
        for (const auto& src : sources) {
            auto it = seen_.find(src);
            const std::uint64_t last = it == seen_.end() ? 0 : it->second;
            const bool stale = tick_ - last > static_cast<std::uint64_t>(cfg_.freshnessTicks);
            if (stale && !stale_.count(src)) {
                stale_.insert(src);
                warn("StaleInput: " + src + " not updated for " + std::to_string(tick_ - last) + " ticks");
            } else if (!stale) {
                stale_.erase(src);
            }
        }
    }

    void warn(std::string w) { warnings_.push_back(std::move(w)); }

    void publish_frame(meshbus::Frame f) {
        client_.publish(*f.topic, std::move(f.payload), f.retain);
    }

    meshbus::Broker& broker_;
    fuzzy::RuleStore& store_;
    ConductorConfig cfg_;
    meshbus::LocalClient client_;
    locator::MovementLedger ledger_;
    ModeController controller_;
    DeviceRegistry registry_;
    Mode registry_mode_ = Mode::automated;
    std::map<std::string, habitat::DeviceSpec> kinds_;

    std::uint64_t tick_ = 0;
    double now_ = 0.0;
    std::optional<locator::Position> position_;
    double position_t_ = 0.0;
    std::optional<int> score_;
    std::map<std::string, Reading> readings_;
    std::map<std::string, std::uint64_t> seen_;
    std::set<std::string> stale_;

    fuzzy::DecisionOutput decision_;
    std::set<std::string> fired_;
    std::set<std::string> active_keys_;
    std::optional<bool> relay_;
    bool game_ = false;
    std::optional<int> zone_;
    bool flame_ = false;

    RunMetrics metrics_;
    std::vector<analytics::RunEvent> events_;
    std::vector<std::string> warnings_;
};

}  // namespace hearthguard::conductor
