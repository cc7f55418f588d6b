#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hearthguard/error.hpp"
#include "hearthguard/fuzzy/variable.hpp"

namespace hearthguard::fuzzy {

// Output variables the engine knows how to decode.
inline constexpr std::string_view kVoice = "voice";
inline constexpr std::string_view kImage = "image";
inline constexpr std::string_view kRelay = "relay";
inline constexpr std::string_view kReminder = "reminder";
inline constexpr std::string_view kGame = "game";

enum class Origin { builtin, caregiver };

/// What a rule's messages are for. Reminder-class messages are gated by the
/// reminder output and by semi-automated mode; alerts never are.
enum class Category { reminder, alert, command };

struct Antecedent {
    std::string variable;
    std::string term;
    bool negated = false;  ///< complement: degree becomes 1 - mu
    bool operator==(const Antecedent&) const = default;
};

struct Consequent {
    std::string variable;
    std::string value;  ///< term label, or a message ID for integer outputs
    bool operator==(const Consequent&) const = default;
};

struct Rule {
    std::string id;
    std::string name;
    std::vector<Antecedent> antecedents;
    std::vector<Consequent> consequents;
    bool enabled = true;
    Origin origin = Origin::builtin;
    Category category = Category::reminder;

    bool operator==(const Rule&) const = default;
};

/// Numeric-aware ordering so that "R2" sorts before "R10".
inline bool id_less(std::string_view a, std::string_view b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            auto na = a.substr(i, ie - i), nb = b.substr(j, je - j);
            while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
            while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
            if (na.size() != nb.size()) return na.size() < nb.size();
            if (na != nb) return na < nb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
    return a < b;
}

inline std::optional<int> parse_message_id(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v < 1) return std::nullopt;
    return v;
}

/// Throws ReferenceError if the rule names a missing variable/term or uses one in the wrong role.
inline void check_references(const Rule& r, const VariableSet& vars) {
    auto where = [&](const std::string& what) { return "rule '" + r.id + "': " + what; };
    if (r.id.empty()) throw ReferenceError("rule id must not be empty");
    if (r.antecedents.empty()) throw ReferenceError(where("needs at least one antecedent"));
    if (r.consequents.empty()) throw ReferenceError(where("needs at least one consequent"));
    for (const auto& a : r.antecedents) {
        const Variable* v = vars.find(a.variable);
        if (!v) throw ReferenceError(where("unknown variable '" + a.variable + "'"));
        if (v->direction != Direction::input)
            throw ReferenceError(where("antecedent variable '" + a.variable + "' is not an input"));
        if (!v->find_term(a.term))
            throw ReferenceError(where("variable '" + a.variable + "' has no term '" + a.term + "'"));
    }
    for (const auto& c : r.consequents) {
        const Variable* v = vars.find(c.variable);
        if (!v) throw ReferenceError(where("unknown variable '" + c.variable + "'"));
        if (v->direction != Direction::output)
            throw ReferenceError(where("consequent variable '" + c.variable + "' is not an output"));
        if (v->type == DataType::integer) {
            auto id = parse_message_id(c.value);
            if (!id) throw ReferenceError(where("'" + c.value + "' is not a message ID"));
            if (!v->universe.contains(*id))
                throw ReferenceError(where("message ID " + c.value + " outside '" + c.variable + "' range"));
        } else if (!v->find_term(c.value)) {
            throw ReferenceError(where("variable '" + c.variable + "' has no term '" + c.value + "'"));
        }
    }
}

/// Variables plus rules; rules are kept sorted by `id_less`.
struct RuleBase {
    VariableSet variables;
    std::vector<Rule> rules;

    bool operator==(const RuleBase&) const = default;

    const Rule* find(std::string_view id) const {
        auto it = std::find_if(rules.begin(), rules.end(), [&](const Rule& r) { return r.id == id; });
        return it == rules.end() ? nullptr : &*it;
    }

    /// Inserts in id order. Throws ReferenceError on bad references or a duplicate id.
    void insert(Rule r) {
        check_references(r, variables);
        if (find(r.id)) throw ReferenceError("duplicate rule id '" + r.id + "'");
        auto pos = std::lower_bound(rules.begin(), rules.end(), r,
                                    [](const Rule& x, const Rule& y) { return id_less(x.id, y.id); });
        rules.insert(pos, std::move(r));
    }

    void validate() const {
        for (std::size_t i = 0; i < rules.size(); ++i) {
            check_references(rules[i], variables);
            if (i > 0 && !id_less(rules[i - 1].id, rules[i].id))
                throw ReferenceError("rules not in id order or duplicated near '" + rules[i].id + "'");
        }
    }

    std::size_t count(Origin o) const {
        return static_cast<std::size_t>(
            std::count_if(rules.begin(), rules.end(), [o](const Rule& r) { return r.origin == o; }));
    }
};

struct AddRule {
    Rule rule;
};
struct RemoveRule {
    std::string id;
};
struct EnableRule {
    std::string id;
};
struct DisableRule {
    std::string id;
};
using RuleEdit = std::variant<AddRule, RemoveRule, EnableRule, DisableRule>;

/// Pure edit: returns the updated copy, leaving `base` untouched on error.
inline RuleBase apply_rule_edit(const RuleBase& base, const RuleEdit& edit) {
    RuleBase out = base;
    auto locate = [&](const std::string& id) -> Rule& {
        auto it = std::find_if(out.rules.begin(), out.rules.end(), [&](const Rule& r) { return r.id == id; });
        if (it == out.rules.end()) throw ReferenceError("no rule with id '" + id + "'");
        return *it;
    };
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, AddRule>) {
                out.insert(e.rule);
            } else if constexpr (std::is_same_v<T, RemoveRule>) {
                Rule& r = locate(e.id);
                out.rules.erase(out.rules.begin() + (&r - out.rules.data()));
            } else if constexpr (std::is_same_v<T, EnableRule>) {
                locate(e.id).enabled = true;
            } else {
                locate(e.id).enabled = false;
            }
        },
        edit);
    return out;
}

}  // namespace hearthguard::fuzzy
