#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearthguard/error.hpp"
#include "hearthguard/fuzzy/rule_store.hpp"
#include "hearthguard/fuzzy/rulebase_json.hpp"
#include "hearthguard/locator.hpp"

// Scenario document (all fields optional unless noted):
//
//   name, description
//   durationSeconds (required), tickInterval = 1, seed = 1
//   startHour = 8            wall-clock hour at t = 0
//   lossProbability = 0      broker base drop probability
//   rangeNoise = 0.1         UWB range sigma, m
//   wearHeight = 1.2         tag height, m
//   initialMovementHours = 0 movement already logged today
//   scoreRepublishSeconds = 10
//   room: {width, depth, height}
//   anchors: [{id, position: [x, y, z]}]
//   objects: [{id, position: [x, y, z]}]
//   zones:   [{id, min: [x, y, z], size: [w, d, h], image}]
//   devices: "default" | [{id, kind, room, essential}]
//   spawn: [x, y]
//   trajectory: [{t, x, y}]                 strictly increasing t
//   events: [{t, kind: "sensor", device, value}
//          | {t, kind: "gameScore", score100 | ability}
//          | {t, kind: "caregiverOverride", mode | ruleEdit | reminder}]
//   ruleFiles: [path]        merged into the rule base, relative to the scenario file
//   ruleExtensions: {variables, rules}
//   ruleEdits: [rule edit]
//
// A suite document is {name, defaults: {...}, runs: [{...}]}; each run is the
// defaults object with the run's fields laid over it.

namespace hearthguard::habitat {

using nlohmann::json;

enum class DeviceKind { temperature, humidity, gas, flame, relay, anchor, tag, coordinator };

inline std::string to_string(DeviceKind k) {
    switch (k) {
        case DeviceKind::temperature: return "temperature";
        case DeviceKind::humidity: return "humidity";
        case DeviceKind::gas: return "gas";
        case DeviceKind::flame: return "flame";
        case DeviceKind::relay: return "relay";
        case DeviceKind::anchor: return "anchor";
        case DeviceKind::tag: return "tag";
        case DeviceKind::coordinator: return "coordinator";
    }
    return "?";
}

inline std::optional<DeviceKind> device_kind_from_string(const std::string& s) {
    for (auto k : {DeviceKind::temperature, DeviceKind::humidity, DeviceKind::gas, DeviceKind::flame,
                   DeviceKind::relay, DeviceKind::anchor, DeviceKind::tag, DeviceKind::coordinator})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

inline bool is_environmental(DeviceKind k) { return k == DeviceKind::temperature || k == DeviceKind::humidity; }

struct DeviceSpec {
    std::string id;
    DeviceKind kind = DeviceKind::temperature;
    std::string room;
    bool essential = true;
    bool operator==(const DeviceSpec&) const = default;
};

/// Topic a room device reports on: home/{room}/{kind}.
inline std::string device_topic(const DeviceSpec& d) { return "home/" + d.room + "/" + to_string(d.kind); }

/// 22 devices: 3 anchors, 1 tag, 1 coordinator, 8 environmental sensors
/// (non-essential) and 9 gas/flame/relay devices.
inline std::vector<DeviceSpec> default_fleet() {
    using K = DeviceKind;
    return {
        {"A1", K::anchor, "kitchen", true},
        {"A2", K::anchor, "kitchen", true},
        {"A3", K::anchor, "kitchen", true},
        {"tag-1", K::tag, "kitchen", true},
        {"coordinator-1", K::coordinator, "kitchen", true},
        {"temperature-1", K::temperature, "kitchen", false},
        {"temperature-2", K::temperature, "kitchen", false},
        {"humidity-1", K::humidity, "kitchen", false},
        {"temperature-3", K::temperature, "bedroom", false},
        {"humidity-2", K::humidity, "bedroom", false},
        {"humidity-3", K::humidity, "bedroom", false},
        {"temperature-4", K::temperature, "washroom", false},
        {"humidity-4", K::humidity, "washroom", false},
        {"gas-1", K::gas, "kitchen", true},
        {"gas-2", K::gas, "kitchen", true},
        {"flame-1", K::flame, "kitchen", true},
        {"flame-2", K::flame, "bedroom", true},
        {"flame-3", K::flame, "washroom", true},
        {"relay-1", K::relay, "kitchen", true},
        {"relay-2", K::relay, "kitchen", true},
        {"relay-3", K::relay, "bedroom", true},
        {"relay-4", K::relay, "washroom", true},
    };
}

struct Waypoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Waypoint&) const = default;
};

enum class EventKind { sensor, gameScore, caregiverOverride };

struct ScenarioEvent {
    double t = 0.0;
    EventKind kind = EventKind::sensor;
    json payload;  // the event object minus t and kind
    bool operator==(const ScenarioEvent&) const = default;
};

struct Scenario {
    std::string name = "scenario";
    std::string description;
    double durationSeconds = 0.0;
    double tickInterval = 1.0;
    std::uint64_t seed = 1;
    double startHour = 8.0;
    double lossProbability = 0.0;
    double rangeNoise = 0.1;
    double wearHeight = 1.2;
    double initialMovementHours = 0.0;
    double scoreRepublishSeconds = 10.0;
    locator::Box room = locator::default_room();
    locator::AnchorSet anchors = locator::default_anchors();
    locator::ObjectRegistry objects = locator::default_objects();
    std::vector<locator::Zone> zones = locator::default_zones();
    std::vector<DeviceSpec> devices = default_fleet();
    locator::Position spawn{4.25, 2.3, 0.0};
    std::vector<Waypoint> trajectory;
    std::vector<ScenarioEvent> events;
    std::vector<json> ruleDocuments;  // ruleFiles contents, then ruleExtensions
    std::vector<json> ruleEdits;

    /// Number of ticks: t = 0, dt, ... up to durationSeconds inclusive.
    std::size_t tick_count() const {
        return static_cast<std::size_t>(std::floor(durationSeconds / tickInterval + 1e-9)) + 1;
    }
    double time_of_tick(std::size_t k) const { return static_cast<double>(k) * tickInterval; }

    const DeviceSpec* device(const std::string& id) const {
        auto it = std::find_if(devices.begin(), devices.end(), [&](const DeviceSpec& d) { return d.id == id; });
        return it == devices.end() ? nullptr : &*it;
    }
};

struct ScenarioSuite {
    std::string name;
    std::vector<Scenario> runs;
};

namespace detail {

inline std::string at(const std::string& path, const char* key) { return path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline double number_field(const json& j, const char* key, const std::string& path, std::optional<double> fallback) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (fallback) return *fallback;
        throw SchemaError(at(path, key), "missing field");
    }
    if (!it->is_number()) throw SchemaError(at(path, key), "expected a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw SchemaError(at(path, key), "not finite");
    return v;
}

inline double ranged(const json& j, const char* key, const std::string& path, std::optional<double> fallback,
                     double lo, double hi, bool open_lo = false) {
    const double v = number_field(j, key, path, fallback);
    if (v < lo || v > hi || (open_lo && v == lo))
        throw SchemaError(at(path, key), "value " + std::to_string(v) + " out of range");
    return v;
}

inline std::string string_field(const json& j, const char* key, const std::string& path,
                                std::optional<std::string> fallback = std::nullopt) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (fallback) return *fallback;
        throw SchemaError(at(path, key), "missing field");
    }
    if (!it->is_string()) throw SchemaError(at(path, key), "expected a string");
    return it->get<std::string>();
}

inline const json& array_field(const json& j, const char* key, const std::string& path) {
    const json& v = j.at(key);
    if (!v.is_array()) throw SchemaError(at(path, key), "expected an array");
    return v;
}

inline std::vector<double> vec(const json& j, const std::string& path, std::size_t n) {
    if (!j.is_array() || j.size() != n) throw SchemaError(path, "expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!j[i].is_number()) throw SchemaError(at(path, i), "expected a number");
        out.push_back(j[i].get<double>());
    }
    return out;
}

inline locator::Position position3(const json& j, const std::string& path) {
    auto v = vec(j, path, 3);
    return {v[0], v[1], v[2]};
}

inline void parse_devices(Scenario& s, const json& j, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() != "default") throw SchemaError(path, "expected \"default\" or an array");
        s.devices = default_fleet();
        return;
    }
    if (!j.is_array()) throw SchemaError(path, "expected \"default\" or an array");
    s.devices.clear();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = at(path, i);
        if (!j[i].is_object()) throw SchemaError(p, "expected an object");
        DeviceSpec d;
        d.id = string_field(j[i], "id", p);
        if (!seen.insert(d.id).second) throw SchemaError(at(p, "id"), "duplicate device id '" + d.id + "'");
        const std::string kind = string_field(j[i], "kind", p);
        auto k = device_kind_from_string(kind);
        if (!k) throw SchemaError(at(p, "kind"), "unknown device kind '" + kind + "'");
        d.kind = *k;
        d.room = string_field(j[i], "room", p);
        if (d.room.empty() || d.room.find_first_of("/+#") != std::string::npos)
            throw SchemaError(at(p, "room"), "room must be a single topic level");
        auto e = j[i].find("essential");
        if (e != j[i].end()) {
            if (!e->is_boolean()) throw SchemaError(at(p, "essential"), "expected a boolean");
            d.essential = e->get<bool>();
        } else {
            d.essential = !is_environmental(d.kind);
        }
        s.devices.push_back(std::move(d));
    }
}

inline void parse_event(Scenario& s, const json& j, const std::string& p) {
    if (!j.is_object()) throw SchemaError(p, "expected an object");
    ScenarioEvent ev;
    ev.t = ranged(j, "t", p, std::nullopt, 0.0, 1e12);
    const std::string kind = string_field(j, "kind", p);
    ev.payload = j;
    ev.payload.erase("t");
    ev.payload.erase("kind");
    if (kind == "sensor") {
        ev.kind = EventKind::sensor;
        const std::string id = string_field(j, "device", p);
        const DeviceSpec* d = s.device(id);
        if (!d) throw SchemaError(at(p, "device"), "unknown device '" + id + "'");
        if (!j.contains("value")) throw SchemaError(at(p, "value"), "missing field");
        const json& v = j.at("value");
        const bool boolean_kind = d->kind == DeviceKind::gas || d->kind == DeviceKind::flame;
        if (boolean_kind && !v.is_boolean()) throw SchemaError(at(p, "value"), "expected a boolean");
        if (is_environmental(d->kind) && !v.is_number()) throw SchemaError(at(p, "value"), "expected a number");
        if (!boolean_kind && !is_environmental(d->kind))
            throw SchemaError(at(p, "device"), "device '" + id + "' is not a sensor");
    } else if (kind == "gameScore") {
        ev.kind = EventKind::gameScore;
        const bool has_score = j.contains("score100"), has_ability = j.contains("ability");
        if (has_score == has_ability) throw SchemaError(p, "gameScore needs exactly one of score100, ability");
        if (has_score) {
            if (!j.at("score100").is_number_integer()) throw SchemaError(at(p, "score100"), "expected an integer");
            ranged(j, "score100", p, std::nullopt, 0, 100);
        } else {
            ranged(j, "ability", p, std::nullopt, 0.0, 1.0);
        }
    } else if (kind == "caregiverOverride") {
        ev.kind = EventKind::caregiverOverride;
        int n = 0;
        if (j.contains("mode")) {
            ++n;
            const json& m = j.at("mode");
            if (!m.is_null() && !(m.is_string() && (m == "automated" || m == "semiAutomated")))
                throw SchemaError(at(p, "mode"), "expected \"automated\", \"semiAutomated\" or null");
        }
        if (j.contains("ruleEdit")) {
            ++n;
            try {
                fuzzy::rule_edit_from_json(j.at("ruleEdit"));
            } catch (const Error& e) {
                throw SchemaError(at(p, "ruleEdit"), e.what());
            }
        }
        if (j.contains("reminder")) {
            ++n;
            const json& r = j.at("reminder");
            const std::string rp = at(p, "reminder");
            if (!r.is_object() || (!r.contains("voice") && !r.contains("image")))
                throw SchemaError(rp, "expected {voice?, image?} with at least one id");
            for (const char* k : {"voice", "image"})
                if (r.contains(k) && !r.at(k).is_number_integer()) throw SchemaError(at(rp, k), "expected an integer");
        }
        if (n != 1) throw SchemaError(p, "caregiverOverride needs exactly one of mode, ruleEdit, reminder");
    } else {
        throw SchemaError(at(p, "kind"), "unknown event kind '" + kind + "'");
    }
    s.events.push_back(std::move(ev));
}

inline json read_json_file(const std::filesystem::path& file, const std::string& path) {
    try {
        return fuzzy::parse_json_text(fuzzy::read_text_file(file.string()));
    } catch (const Error& e) {
        throw SchemaError(path, e.what());
    }
}

}  // namespace detail

/// Validates one scenario object. `baseDir` resolves relative ruleFiles.
inline Scenario load_scenario(const json& doc, const std::filesystem::path& baseDir = {},
                              const std::string& path = "$") {
    using namespace detail;
    if (!doc.is_object()) throw SchemaError(path, "expected an object");
    Scenario s;
    s.name = string_field(doc, "name", path, s.name);
    s.description = string_field(doc, "description", path, "");
    s.durationSeconds = ranged(doc, "durationSeconds", path, std::nullopt, 0.0, 1e9, true);
    s.tickInterval = ranged(doc, "tickInterval", path, 1.0, 0.0, 3600.0, true);
    if (doc.contains("seed")) {
        const json& seed = doc.at("seed");
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) throw SchemaError(at(path, "seed"), "expected a non-negative integer");
        s.seed = doc.at("seed").get<std::uint64_t>();
    }
    s.startHour = ranged(doc, "startHour", path, 8.0, 0.0, 24.0);
    if (s.startHour == 24.0) throw SchemaError(at(path, "startHour"), "must be below 24");
    s.lossProbability = ranged(doc, "lossProbability", path, 0.0, 0.0, 1.0);
    s.rangeNoise = ranged(doc, "rangeNoise", path, 0.1, 0.0, 10.0);
    s.wearHeight = ranged(doc, "wearHeight", path, 1.2, 0.0, 10.0);
    s.initialMovementHours = ranged(doc, "initialMovementHours", path, 0.0, 0.0, 24.0);
    s.scoreRepublishSeconds = ranged(doc, "scoreRepublishSeconds", path, 10.0, 0.0, 1e9, true);

    if (doc.contains("room")) {
        const json& r = doc.at("room");
        const std::string p = at(path, "room");
        if (!r.is_object()) throw SchemaError(p, "expected an object");
        s.room = locator::room_box(ranged(r, "width", p, std::nullopt, 0.0, 1e4, true),
                                   ranged(r, "depth", p, std::nullopt, 0.0, 1e4, true),
                                   ranged(r, "height", p, std::nullopt, 0.0, 1e4, true));
    }
    s.anchors.room = s.room;
    s.spawn = s.room.center();
    s.spawn.z = 0.0;

    if (doc.contains("anchors")) {
        const json& a = array_field(doc, "anchors", path);
        s.anchors.anchors.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string p = at(at(path, "anchors"), i);
            if (!a[i].is_object() || !a[i].contains("position")) throw SchemaError(p, "expected {id, position}");
            s.anchors.anchors.push_back({string_field(a[i], "id", p), position3(a[i].at("position"), at(p, "position"))});
        }
    }
    try {
        s.anchors.validate();
    } catch (const Error& e) {
        throw SchemaError(at(path, "anchors"), e.what());
    }

    if (doc.contains("objects")) {
        const json& o = array_field(doc, "objects", path);
        s.objects = {};
        for (std::size_t i = 0; i < o.size(); ++i) {
            const std::string p = at(at(path, "objects"), i);
            if (!o[i].is_object() || !o[i].contains("position")) throw SchemaError(p, "expected {id, position}");
            s.objects.add(string_field(o[i], "id", p), position3(o[i].at("position"), at(p, "position")));
        }
    }

    if (doc.contains("zones")) {
        const json& z = array_field(doc, "zones", path);
        s.zones.clear();
        std::set<int> ids;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const std::string p = at(at(path, "zones"), i);
            if (!z[i].is_object() || !z[i].contains("min") || !z[i].contains("size"))
                throw SchemaError(p, "expected {id, min, size, image}");
            locator::Zone zone;
            if (!z[i].contains("id") || !z[i].at("id").is_number_integer()) throw SchemaError(at(p, "id"), "expected an integer");
            zone.id = z[i].at("id").get<int>();
            if (!ids.insert(zone.id).second) throw SchemaError(at(p, "id"), "duplicate zone id");
            zone.box = {position3(z[i].at("min"), at(p, "min")), position3(z[i].at("size"), at(p, "size"))};
            if (!z[i].contains("image") || !z[i].at("image").is_number_integer())
                throw SchemaError(at(p, "image"), "expected an integer");
            zone.imageMessageId = z[i].at("image").get<int>();
            s.zones.push_back(zone);
        }
    }

    if (doc.contains("devices")) parse_devices(s, doc.at("devices"), at(path, "devices"));

    if (doc.contains("spawn")) {
        auto v = vec(doc.at("spawn"), at(path, "spawn"), 2);
        s.spawn = {v[0], v[1], 0.0};
    }
    if (!s.room.contains(locator::Position{s.spawn.x, s.spawn.y, s.room.min.z})) throw SchemaError(at(path, "spawn"), "outside the room");

    if (doc.contains("trajectory")) {
        const json& tr = array_field(doc, "trajectory", path);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const std::string p = at(at(path, "trajectory"), i);
            if (!tr[i].is_object()) throw SchemaError(p, "expected an object");
            Waypoint w{number_field(tr[i], "t", p, std::nullopt), number_field(tr[i], "x", p, std::nullopt),
                       number_field(tr[i], "y", p, std::nullopt)};
            if (w.t < 0) throw SchemaError(at(p, "t"), "negative time");
            if (!s.trajectory.empty() && !(w.t > s.trajectory.back().t))
                throw SchemaError(at(p, "t"), "waypoint times must strictly increase");
            if (!s.room.contains(locator::Position{w.x, w.y, s.room.min.z})) throw SchemaError(p, "waypoint outside the room");
            s.trajectory.push_back(w);
        }
    }

    if (doc.contains("events")) {
        const json& ev = array_field(doc, "events", path);
        for (std::size_t i = 0; i < ev.size(); ++i) parse_event(s, ev[i], at(at(path, "events"), i));
        std::stable_sort(s.events.begin(), s.events.end(),
                         [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t < b.t; });
    }

    if (doc.contains("ruleFiles")) {
        const json& files = array_field(doc, "ruleFiles", path);
        for (std::size_t i = 0; i < files.size(); ++i) {
            const std::string p = at(at(path, "ruleFiles"), i);
            if (!files[i].is_string()) throw SchemaError(p, "expected a path");
            std::filesystem::path f = files[i].get<std::string>();
            if (f.is_relative()) f = baseDir / f;
            s.ruleDocuments.push_back(read_json_file(f, p));
        }
    }
    if (doc.contains("ruleExtensions")) {
        if (!doc.at("ruleExtensions").is_object()) throw SchemaError(at(path, "ruleExtensions"), "expected an object");
        s.ruleDocuments.push_back(doc.at("ruleExtensions"));
    }
    if (doc.contains("ruleEdits")) {
        const json& edits = array_field(doc, "ruleEdits", path);
        for (std::size_t i = 0; i < edits.size(); ++i) {
            try {
                fuzzy::rule_edit_from_json(edits[i]);
            } catch (const Error& e) {
                throw SchemaError(at(at(path, "ruleEdits"), i), e.what());
            }
            s.ruleEdits.push_back(edits[i]);
        }
    }
    return s;
}

/// Loads a single scenario or a suite of runs.
inline ScenarioSuite load_suite(const json& doc, const std::filesystem::path& baseDir = {}) {
    if (!doc.is_object()) throw SchemaError("$", "expected an object");
    ScenarioSuite suite;
    if (!doc.contains("runs")) {
        suite.runs.push_back(load_scenario(doc, baseDir));
        suite.name = suite.runs.front().name;
        return suite;
    }
    suite.name = detail::string_field(doc, "name", "$", "suite");
    json defaults = doc.value("defaults", json::object());
    if (!defaults.is_object()) throw SchemaError("$.defaults", "expected an object");
    const json& runs = detail::array_field(doc, "runs", "$");
    if (runs.empty()) throw SchemaError("$.runs", "no runs");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string p = "$.runs[" + std::to_string(i) + "]";
        if (!runs[i].is_object()) throw SchemaError(p, "expected an object");
        json merged = defaults;
        for (const auto& [k, v] : runs[i].items()) merged[k] = v;
        if (!merged.contains("name")) merged["name"] = suite.name + "-" + std::to_string(i + 1);
        suite.runs.push_back(load_scenario(merged, baseDir, p));
    }
    return suite;
}

inline ScenarioSuite load_suite_file(const std::filesystem::path& file) {
    json doc;
    try {
        doc = fuzzy::parse_json_text(fuzzy::read_text_file(file.string()));
    } catch (const ParseError& e) {
        throw SchemaError("$", e.what());
    }
    return load_suite(doc, file.parent_path());
}

/// Rule base for a run: `base` plus the scenario's rule documents and edits.
inline fuzzy::RuleBase scenario_rule_base(const fuzzy::RuleBase& base, const Scenario& s) {
    fuzzy::RuleBase out = base;
    for (std::size_t i = 0; i < s.ruleDocuments.size(); ++i) {
        try {
            fuzzy::merge_rule_document(out, s.ruleDocuments[i]);
        } catch (const Error& e) {
            throw SchemaError("$.ruleDocuments[" + std::to_string(i) + "]", e.what());
        }
    }
    for (std::size_t i = 0; i < s.ruleEdits.size(); ++i) {
        try {
            out = fuzzy::apply_rule_edit(out, fuzzy::rule_edit_from_json(s.ruleEdits[i]));
        } catch (const Error& e) {
            throw SchemaError("$.ruleEdits[" + std::to_string(i) + "]", e.what());
        }
    }
    return out;
}

}  // namespace hearthguard::habitat
