#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hearthguard/fuzzy/rule.hpp"
#include "hearthguard/fuzzy/variable.hpp"

namespace hearthguard::fuzzy {

inline constexpr double kDefaultActivationThreshold = 0.5;

struct FiredRule {
    std::string id;
    double strength = 0.0;
    bool operator==(const FiredRule&) const = default;
};

struct DecisionOutput {
    std::optional<int> voiceMessageId;
    std::optional<int> imageMessageId;
    std::optional<bool> relayStatus;
    std::optional<bool> reminderEnabled;
    std::optional<bool> gameStart;

    // Rule that won each output.
    std::optional<std::string> voiceRuleId;
    std::optional<std::string> imageRuleId;
    std::optional<std::string> relayRuleId;

    std::vector<FiredRule> firedRules;   ///< every enabled rule at or above the threshold, id order
    std::vector<std::string> gatedRules; ///< fired reminder-class rules muted by reminder = No

    bool empty() const {
        return !voiceMessageId && !imageMessageId && !relayStatus && !reminderEnabled && !gameStart;
    }
    bool operator==(const DecisionOutput&) const = default;
};

/// Firing strength of one rule: min over antecedent degrees. Absent inputs count as 0.
inline double firing_strength(const Rule& r, const Fuzzified& degrees) {
    double s = 1.0;
    for (const auto& a : r.antecedents) {
        const double mu = degrees.degree(a.variable, a.term);
        s = std::min(s, a.negated ? 1.0 - mu : mu);
    }
    return s;
}

/// Strength for each rule in `base.rules`; disabled rules get 0.
inline std::vector<double> firing_strengths(const RuleBase& base, const Fuzzified& degrees) {
    std::vector<double> out;
    out.reserve(base.rules.size());
    for (const auto& r : base.rules) out.push_back(r.enabled ? firing_strength(r, degrees) : 0.0);
    return out;
}

namespace detail {

inline const Consequent* consequent_for(const Rule& r, std::string_view var) {
    for (const auto& c : r.consequents)
        if (c.variable == var) return &c;
    return nullptr;
}

inline std::optional<bool> bool_value(const VariableSet& vars, std::string_view var, const std::string& label) {
    const Variable* v = vars.find(var);
    if (!v) return std::nullopt;
    const Term* t = v->find_term(label);
    if (!t || !std::holds_alternative<CrispBool>(t->mf)) return std::nullopt;
    return std::get<CrispBool>(t->mf).value;
}

}  // namespace detail

/// Output selection from precomputed strengths (aligned with `base.rules`).
///
/// For each output the strongest candidate at or above `theta` wins; rules are
/// visited in id order so ties resolve to the lowest id. When the reminder
/// output resolves to "No", reminder-class rules are excluded from every other
/// output.
inline DecisionOutput select_outputs(const RuleBase& base, std::span<const double> strengths, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw InvalidModel("activation threshold must lie in (0,1]");
    DecisionOutput out;
    const auto& rules = base.rules;

    std::vector<bool> fired(rules.size(), false);
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (rules[i].enabled && strengths[i] >= theta) {
            fired[i] = true;
            out.firedRules.push_back({rules[i].id, strengths[i]});
        }
    }

    auto best_for = [&](std::string_view var, const std::vector<bool>& eligible) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < rules.size(); ++i) {
            if (!eligible[i] || !detail::consequent_for(rules[i], var)) continue;
            if (!best || strengths[i] > strengths[*best]) best = i;
        }
        return best;
    };

    if (auto w = best_for(kReminder, fired)) {
        out.reminderEnabled = detail::bool_value(base.variables, kReminder,
                                                 detail::consequent_for(rules[*w], kReminder)->value);
    }

    std::vector<bool> eligible = fired;
    if (out.reminderEnabled == false) {
        for (std::size_t i = 0; i < rules.size(); ++i) {
            if (fired[i] && rules[i].category == Category::reminder && !detail::consequent_for(rules[i], kReminder)) {
                eligible[i] = false;
                out.gatedRules.push_back(rules[i].id);
            }
        }
    }

    if (auto w = best_for(kVoice, eligible)) {
        out.voiceMessageId = parse_message_id(detail::consequent_for(rules[*w], kVoice)->value);
        out.voiceRuleId = rules[*w].id;
    }
    if (auto w = best_for(kImage, eligible)) {
        out.imageMessageId = parse_message_id(detail::consequent_for(rules[*w], kImage)->value);
        out.imageRuleId = rules[*w].id;
    }
    if (auto w = best_for(kRelay, eligible)) {
        out.relayStatus = detail::bool_value(base.variables, kRelay, detail::consequent_for(rules[*w], kRelay)->value);
        out.relayRuleId = rules[*w].id;
    }
    if (auto w = best_for(kGame, eligible)) {
        out.gameStart = detail::bool_value(base.variables, kGame, detail::consequent_for(rules[*w], kGame)->value);
    }
    return out;
}

inline DecisionOutput infer_decision(const RuleBase& base, const Fuzzified& degrees,
                                     double theta = kDefaultActivationThreshold) {
    const auto strengths = firing_strengths(base, degrees);
    return select_outputs(base, strengths, theta);
}

/// fuzzify + infer in one step.
inline DecisionOutput decide(const RuleBase& base, const CrispInputSnapshot& snapshot,
                             double theta = kDefaultActivationThreshold) {
    return infer_decision(base, fuzzify(base.variables, snapshot), theta);
}

}  // namespace hearthguard::fuzzy
