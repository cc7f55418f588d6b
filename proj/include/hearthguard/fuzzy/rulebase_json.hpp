#pragma once

#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hearthguard/error.hpp"
#include "hearthguard/fuzzy/rule.hpp"

// Rule file format:
//
//   {"variables": [{"name", "direction": "input"|"output", "type": "linguistic"|"boolean"|"integer",
//                   "universe": {"min", "max", "unit"},
//                   "terms": [{"label", "mf": {"kind": "gaussian", "center", "sigma"} | ...}]}],
//    "rules": [{"id", "name", "category", "origin", "enabled",
//               "if": [{"var", "is", "not"?}], "then": [{"var", "is"}]}]}
//
// Membership kinds: gaussian(center, sigma), triangular(a, b, c), trapezoidal(a, b, c, d),
// singleton(value), bool(value).

namespace hearthguard::fuzzy {

using nlohmann::json;

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(path + "." + key, "missing field");
    return *it;
}

inline double number(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ParseError(path + "." + key, "expected a number");
    return v.get<double>();
}

inline std::string string(const json& j, const char* key, const std::string& path) {
    const json& v = require(j, key, path);
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (!v.is_string()) throw ParseError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

template <typename E>
E enum_value(const json& j, const char* key, const std::string& path,
             std::initializer_list<std::pair<const char*, E>> table, std::optional<E> fallback = {}) {
    if (fallback && (!j.is_object() || !j.contains(key))) return *fallback;
    const std::string s = string(j, key, path);
    for (const auto& [name, value] : table)
        if (s == name) return value;
    throw ParseError(path + "." + key, "unexpected value '" + s + "'");
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace detail

inline MembershipFunction membership_from_json(const json& j, const std::string& path) {
    const std::string kind = detail::string(j, "kind", path);
    if (kind == "gaussian") return Gaussian{detail::number(j, "center", path), detail::number(j, "sigma", path)};
    if (kind == "triangular")
        return Triangular{detail::number(j, "a", path), detail::number(j, "b", path), detail::number(j, "c", path)};
    if (kind == "trapezoidal")
        return Trapezoidal{detail::number(j, "a", path), detail::number(j, "b", path), detail::number(j, "c", path),
                           detail::number(j, "d", path)};
    if (kind == "singleton") return Singleton{detail::number(j, "value", path)};
    if (kind == "bool") {
        const json& v = detail::require(j, "value", path);
        if (!v.is_boolean()) throw ParseError(path + ".value", "expected a boolean");
        return CrispBool{v.get<bool>()};
    }
    throw ParseError(path + ".kind", "unknown membership kind '" + kind + "'");
}

inline json membership_to_json(const MembershipFunction& mf) {
    return std::visit(
        [](const auto& f) -> json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Gaussian>) return {{"kind", "gaussian"}, {"center", f.center}, {"sigma", f.sigma}};
            if constexpr (std::is_same_v<T, Triangular>) return {{"kind", "triangular"}, {"a", f.a}, {"b", f.b}, {"c", f.c}};
            if constexpr (std::is_same_v<T, Trapezoidal>)
                return {{"kind", "trapezoidal"}, {"a", f.a}, {"b", f.b}, {"c", f.c}, {"d", f.d}};
            if constexpr (std::is_same_v<T, Singleton>) return {{"kind", "singleton"}, {"value", f.value}};
            if constexpr (std::is_same_v<T, CrispBool>) return {{"kind", "bool"}, {"value", f.value}};
        },
        mf);
}

inline Variable variable_from_json(const json& j, const std::string& path) {
    Variable v;
    v.name = detail::string(j, "name", path);
    v.direction = detail::enum_value<Direction>(j, "direction", path,
                                                {{"input", Direction::input}, {"output", Direction::output}});
    v.type = detail::enum_value<DataType>(
        j, "type", path,
        {{"linguistic", DataType::linguistic}, {"boolean", DataType::boolean}, {"integer", DataType::integer}});
    const json& u = detail::require(j, "universe", path);
    v.universe.lo = detail::number(u, "min", path + ".universe");
    v.universe.hi = detail::number(u, "max", path + ".universe");
    if (u.contains("unit")) v.universe.unit = detail::string(u, "unit", path + ".universe");
    if (j.contains("terms")) {
        const json& terms = j.at("terms");
        if (!terms.is_array()) throw ParseError(path + ".terms", "expected an array");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const std::string tp = path + ".terms[" + std::to_string(i) + "]";
            v.terms.push_back({detail::string(terms[i], "label", tp),
                               membership_from_json(detail::require(terms[i], "mf", tp), tp + ".mf")});
        }
    }
    try {
        VariableSet::validate_variable(v);
    } catch (const InvalidModel& e) {
        throw ParseError(path, e.what());
    }
    return v;
}

inline json variable_to_json(const Variable& v) {
    json terms = json::array();
    for (const auto& t : v.terms) terms.push_back({{"label", t.label}, {"mf", membership_to_json(t.mf)}});
    static constexpr const char* dirs[] = {"input", "output"};
    static constexpr const char* types[] = {"linguistic", "boolean", "integer"};
    return {{"name", v.name},
            {"direction", dirs[static_cast<int>(v.direction)]},
            {"type", types[static_cast<int>(v.type)]},
            {"universe", {{"min", v.universe.lo}, {"max", v.universe.hi}, {"unit", v.universe.unit}}},
            {"terms", terms}};
}

inline Rule rule_from_json(const json& j, const std::string& path) {
    Rule r;
    r.id = detail::string(j, "id", path);
    if (j.contains("name")) r.name = detail::string(j, "name", path);
    r.category = detail::enum_value<Category>(
        j, "category", path,
        {{"reminder", Category::reminder}, {"alert", Category::alert}, {"command", Category::command}},
        Category::reminder);
    r.origin = detail::enum_value<Origin>(j, "origin", path,
                                          {{"builtin", Origin::builtin}, {"caregiver", Origin::caregiver}},
                                          Origin::caregiver);
    if (j.contains("enabled")) {
        if (!j.at("enabled").is_boolean()) throw ParseError(path + ".enabled", "expected a boolean");
        r.enabled = j.at("enabled").get<bool>();
    }
    const json& ifs = detail::require(j, "if", path);
    const json& thens = detail::require(j, "then", path);
    if (!ifs.is_array()) throw ParseError(path + ".if", "expected an array");
    if (!thens.is_array()) throw ParseError(path + ".then", "expected an array");
    for (std::size_t i = 0; i < ifs.size(); ++i) {
        const std::string p = path + ".if[" + std::to_string(i) + "]";
        Antecedent a{detail::string(ifs[i], "var", p), detail::string(ifs[i], "is", p), false};
        if (ifs[i].contains("not")) {
            if (!ifs[i].at("not").is_boolean()) throw ParseError(p + ".not", "expected a boolean");
            a.negated = ifs[i].at("not").get<bool>();
        }
        r.antecedents.push_back(std::move(a));
    }
    for (std::size_t i = 0; i < thens.size(); ++i) {
        const std::string p = path + ".then[" + std::to_string(i) + "]";
        r.consequents.push_back({detail::string(thens[i], "var", p), detail::string(thens[i], "is", p)});
    }
    return r;
}

inline json rule_to_json(const Rule& r) {
    static constexpr const char* cats[] = {"reminder", "alert", "command"};
    static constexpr const char* origins[] = {"builtin", "caregiver"};
    json ifs = json::array(), thens = json::array();
    for (const auto& a : r.antecedents) {
        json e = {{"var", a.variable}, {"is", a.term}};
        if (a.negated) e["not"] = true;
        ifs.push_back(std::move(e));
    }
    for (const auto& c : r.consequents) thens.push_back({{"var", c.variable}, {"is", c.value}});
    return {{"id", r.id},
            {"name", r.name},
            {"category", cats[static_cast<int>(r.category)]},
            {"origin", origins[static_cast<int>(r.origin)]},
            {"enabled", r.enabled},
            {"if", ifs},
            {"then", thens}};
}

/// Merges `{"variables": [...], "rules": [...]}` into `base`. Variables with an
/// existing name replace the old definition; rule references are checked after.
inline void merge_rule_document(RuleBase& base, const json& doc, const std::string& root = "$") {
    if (!doc.is_object()) throw ParseError(root, "expected an object");
    if (doc.contains("variables")) {
        const json& vars = doc.at("variables");
        if (!vars.is_array()) throw ParseError(root + ".variables", "expected an array");
        for (std::size_t i = 0; i < vars.size(); ++i)
            base.variables.add(variable_from_json(vars[i], root + ".variables[" + std::to_string(i) + "]"));
    }
    if (doc.contains("rules")) {
        const json& rules = doc.at("rules");
        if (!rules.is_array()) throw ParseError(root + ".rules", "expected an array");
        for (std::size_t i = 0; i < rules.size(); ++i) {
            const std::string p = root + ".rules[" + std::to_string(i) + "]";
            Rule r = rule_from_json(rules[i], p);
            try {
                base.insert(std::move(r));
            } catch (const ReferenceError& e) {
                throw ReferenceError(p + ": " + e.what());
            }
        }
    }
    base.validate();
}

inline json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("line " + std::to_string(detail::line_of(text, e.byte)), e.what());
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses a complete rule document. ParseError carries the line or field;
/// ReferenceError reports unknown variables or terms.
inline RuleBase load_rule_base(const std::string& text) {
    RuleBase base;
    merge_rule_document(base, parse_json_text(text));
    return base;
}

inline RuleBase load_rule_base_file(const std::string& path) { return load_rule_base(read_text_file(path)); }

inline json rule_base_to_json(const RuleBase& base) {
    json vars = json::array(), rules = json::array();
    for (const auto& v : base.variables.all()) vars.push_back(variable_to_json(v));
    for (const auto& r : base.rules) rules.push_back(rule_to_json(r));
    return {{"variables", vars}, {"rules", rules}};
}

/// Membership-parameter override: replaces variables by name, keeping the rules.
inline RuleBase apply_membership_config(const RuleBase& base, const json& doc) {
    RuleBase out = base;
    json vars_only = json::object();
    if (doc.contains("variables")) vars_only["variables"] = doc.at("variables");
    merge_rule_document(out, vars_only);
    return out;
}

/// Rule edit as carried on the care/rules topic:
///   {"op": "add", "rule": {...}} | {"op": "remove"|"enable"|"disable", "id": "..."}
inline RuleEdit rule_edit_from_json(const json& j) {
    const std::string op = detail::string(j, "op", "$");
    if (op == "add") {
        Rule r = rule_from_json(detail::require(j, "rule", "$"), "$.rule");
        return AddRule{std::move(r)};
    }
    const std::string id = detail::string(j, "id", "$");
    if (op == "remove") return RemoveRule{id};
    if (op == "enable") return EnableRule{id};
    if (op == "disable") return DisableRule{id};
    throw ParseError("$.op", "unknown rule edit '" + op + "'");
}

inline json rule_edit_to_json(const RuleEdit& edit) {
    return std::visit(
        [](const auto& e) -> json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, AddRule>) return {{"op", "add"}, {"rule", rule_to_json(e.rule)}};
            if constexpr (std::is_same_v<T, RemoveRule>) return {{"op", "remove"}, {"id", e.id}};
            if constexpr (std::is_same_v<T, EnableRule>) return {{"op", "enable"}, {"id", e.id}};
            if constexpr (std::is_same_v<T, DisableRule>) return {{"op", "disable"}, {"id", e.id}};
        },
        edit);
}

}  // namespace hearthguard::fuzzy
