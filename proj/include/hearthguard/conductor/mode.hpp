#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hearthguard/error.hpp"
#include "hearthguard/fuzzy/membership.hpp"
#include "hearthguard/fuzzy/variable.hpp"
#include "hearthguard/fuzzy/rule.hpp"
#include "hearthguard/habitat/scenario.hpp"
#include "hearthguard/meshbus/frame.hpp"

namespace hearthguard::conductor {

enum class Mode { automated, semiAutomated };

/// How the mode is chosen for a run: fixed, or driven by the game score.
enum class ModePolicy { automated, semiAutomated, adaptive };

inline std::string to_string(Mode m) { return m == Mode::automated ? "automated" : "semiAutomated"; }

inline std::string to_string(ModePolicy p) {
    switch (p) {
        case ModePolicy::automated: return "automated";
        case ModePolicy::semiAutomated: return "semiAutomated";
        case ModePolicy::adaptive: return "adaptive";
    }
    return "?";
}

inline std::optional<Mode> mode_from_string(const std::string& s) {
    if (s == "automated" || s == "auto") return Mode::automated;
    if (s == "semiAutomated" || s == "semi") return Mode::semiAutomated;
    return std::nullopt;
}

inline std::optional<ModePolicy> policy_from_string(const std::string& s) {
    if (s == "adaptive") return ModePolicy::adaptive;
    if (auto m = mode_from_string(s)) return *m == Mode::automated ? ModePolicy::automated : ModePolicy::semiAutomated;
    return std::nullopt;
}

inline constexpr const char* kScoreVariable = "game_score";
inline constexpr const char* kHighTerm = "high";

/// Degree of "game score is high" under `base`.
inline double score_high_degree(const fuzzy::RuleBase& base, double score100) {
    const auto* v = base.variables.find(kScoreVariable);
    if (!v) throw ReferenceError(std::string("rule base has no variable '") + kScoreVariable + "'");
    const auto* t = v->find_term(kHighTerm);
    if (!t) throw ReferenceError(std::string("variable '") + kScoreVariable + "' has no term 'high'");
    return fuzzy::evaluate(t->mf, v->universe.clamp(score100));
}

/// Target mode for one score reading. An override always wins; otherwise a
/// high score (degree >= 0.5) selects semi-automated operation.
inline Mode evaluate_mode_switch(const fuzzy::RuleBase& base, double score100, Mode /*current*/,
                                 std::optional<Mode> override_mode = std::nullopt) {
    if (override_mode) return *override_mode;
    return score_high_degree(base, score100) >= 0.5 ? Mode::semiAutomated : Mode::automated;
}

/// Score-driven mode with hysteresis plus caregiver override.
class ModeController {
public:
    explicit ModeController(Mode initial = Mode::automated, int hysteresis = 3)
        : scoreMode_(initial), pending_(initial), hysteresis_(hysteresis) {}

    /// Feeds one score publication.
    void observe(const fuzzy::RuleBase& base, double score100) {
        const Mode target = evaluate_mode_switch(base, score100, scoreMode_);
        if (target == scoreMode_) {
            streak_ = 0;
            return;
        }
        if (streak_ > 0 && target == pending_) {
            ++streak_;
        } else {
            pending_ = target;
            streak_ = 1;
        }
        if (streak_ >= hysteresis_) {
            scoreMode_ = target;
            streak_ = 0;
        }
    }

    void set_override(std::optional<Mode> m) { override_ = m; }
    std::optional<Mode> override_mode() const { return override_; }
    Mode score_mode() const { return scoreMode_; }
    Mode mode() const { return override_ ? *override_ : scoreMode_; }

private:
    Mode scoreMode_;
    Mode pending_;
    int hysteresis_;
    int streak_ = 0;
    std::optional<Mode> override_;
};

struct RegisteredDevice {
    std::string id;
    bool essential = true;
    bool active = true;
    bool operator==(const RegisteredDevice&) const = default;
};

struct DeviceRegistry {
    std::vector<RegisteredDevice> devices;

    std::size_t active_count() const {
        std::size_t n = 0;
        for (const auto& d : devices) n += d.active;
        return n;
    }
    const RegisteredDevice* find(const std::string& id) const {
        for (const auto& d : devices)
            if (d.id == id) return &d;
        return nullptr;
    }
    bool operator==(const DeviceRegistry&) const = default;
};

inline DeviceRegistry make_registry(const std::vector<habitat::DeviceSpec>& fleet) {
    DeviceRegistry r;
    for (const auto& d : fleet) r.devices.push_back({d.id, d.essential, true});
    return r;
}

inline std::string device_active_topic(const std::string& id) { return "sys/device/" + id + "/active"; }

inline meshbus::Frame device_active_frame(const RegisteredDevice& d) {
    return meshbus::make_pub(device_active_topic(d.id), {{"active", d.active}}, true);
}

struct RegistryUpdate {
    DeviceRegistry registry;
    std::vector<meshbus::Frame> frames;  // one per device whose state changed
};

/// Semi-automated keeps only essential devices on; automated turns everything on.
inline RegistryUpdate apply_registry_mode(const DeviceRegistry& registry, Mode mode) {
    RegistryUpdate out{registry, {}};
    for (auto& d : out.registry.devices) {
        const bool want = d.essential || mode == Mode::automated;
        if (d.active == want) continue;
        d.active = want;
        out.frames.push_back(device_active_frame(d));
    }
    return out;
}

}  // namespace hearthguard::conductor
