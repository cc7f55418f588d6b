#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hearthguard/error.hpp"
#include "hearthguard/fuzzy/membership.hpp"

namespace hearthguard::fuzzy {

enum class DataType { linguistic, boolean, integer };
enum class Direction { input, output };

struct Universe {
    double lo = 0.0;
    double hi = 1.0;
    std::string unit;
    bool operator==(const Universe&) const = default;

    double clamp(double x) const { return std::clamp(x, lo, hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct Term {
    std::string label;
    MembershipFunction mf;
    bool operator==(const Term&) const = default;
};

struct Variable {
    std::string name;
    Direction direction = Direction::input;
    DataType type = DataType::linguistic;
    Universe universe;
    std::vector<Term> terms;

    bool operator==(const Variable&) const = default;

    const Term* find_term(std::string_view label) const {
        auto it = std::find_if(terms.begin(), terms.end(), [&](const Term& t) { return t.label == label; });
        return it == terms.end() ? nullptr : &*it;
    }
};

/// Smallest max-over-terms degree on a dense grid plus every term breakpoint.
/// Zero means some point of the universe is not covered by any term.
inline double min_coverage(const Variable& v) {
    std::vector<double> xs;
    constexpr int kSteps = 2000;
    for (int i = 0; i <= kSteps; ++i)
        xs.push_back(v.universe.lo + (v.universe.hi - v.universe.lo) * i / kSteps);
    for (const auto& t : v.terms) {
        std::visit(
            [&](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Trapezoidal>) xs.insert(xs.end(), {f.a, f.b, f.c, f.d});
                if constexpr (std::is_same_v<T, Triangular>) xs.insert(xs.end(), {f.a, f.b, f.c});
            },
            t.mf);
    }
    double worst = 1.0;
    for (double x : xs) {
        if (!v.universe.contains(x)) continue;
        double best = 0.0;
        for (const auto& t : v.terms) best = std::max(best, evaluate(t.mf, x));
        worst = std::min(worst, best);
    }
    return worst;
}

/// Registered variables, kept in insertion order with name lookup.
class VariableSet {
public:
    VariableSet() = default;
    explicit VariableSet(std::vector<Variable> vars) {
        for (auto& v : vars) add(std::move(v));
    }

    /// Adds or replaces a variable after validating it.
    void add(Variable v) {
        validate_variable(v);
        if (auto it = index_.find(v.name); it != index_.end()) {
            vars_[it->second] = std::move(v);
        } else {
            index_.emplace(v.name, vars_.size());
            vars_.push_back(std::move(v));
        }
    }

    const Variable* find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : &vars_[it->second];
    }
    const Variable& at(std::string_view name) const {
        if (auto* v = find(name)) return *v;
        throw UnknownVariable("unknown variable '" + std::string(name) + "'");
    }

    const std::vector<Variable>& all() const { return vars_; }
    std::size_t size() const { return vars_.size(); }

    bool operator==(const VariableSet& o) const { return vars_ == o.vars_; }

    static void validate_variable(const Variable& v) {
        if (v.name.empty()) throw InvalidModel("variable name must not be empty");
        if (!(v.universe.lo < v.universe.hi))
            throw InvalidModel("variable '" + v.name + "': universe must satisfy lo < hi");
        std::set<std::string> labels;
        for (const auto& t : v.terms) {
            if (!labels.insert(t.label).second)
                throw InvalidModel("variable '" + v.name + "': duplicate term '" + t.label + "'");
            try {
                validate(t.mf);
            } catch (const InvalidModel& e) {
                throw InvalidModel("variable '" + v.name + "' term '" + t.label + "': " + e.what());
            }
        }
        if (v.type == DataType::linguistic) {
            if (v.terms.empty()) throw InvalidModel("variable '" + v.name + "' has no terms");
            if (min_coverage(v) <= 0.0)
                throw InvalidModel("variable '" + v.name + "': terms do not cover the universe");
        }
        if (v.type == DataType::boolean) {
            for (const auto& t : v.terms)
                if (!std::holds_alternative<CrispBool>(t.mf))
                    throw InvalidModel("boolean variable '" + v.name + "' needs bool terms");
        }
    }

private:
    std::vector<Variable> vars_;
    std::map<std::string, std::size_t> index_;
};

/// Crisp readings keyed by input variable name; booleans are stored as 0/1.
struct CrispInputSnapshot {
    std::map<std::string, double> values;
    double timestamp = 0.0;

    CrispInputSnapshot& set(std::string name, double v) {
        values[std::move(name)] = v;
        return *this;
    }
    CrispInputSnapshot& set(std::string name, bool v) { return set(std::move(name), v ? 1.0 : 0.0); }
};

using TermKey = std::pair<std::string, std::string>;

struct Fuzzified {
    std::map<TermKey, double> degrees;
    std::vector<std::string> clamped;  ///< inputs pulled back into their universe

    double degree(const std::string& var, const std::string& term) const {
        auto it = degrees.find({var, term});
        return it == degrees.end() ? 0.0 : it->second;
    }
};

/// Degree of every term of every variable present in the snapshot.
/// Out-of-universe values are clamped to the nearest bound and reported in `clamped`.
inline Fuzzified fuzzify(const VariableSet& vars, const CrispInputSnapshot& snapshot) {
    Fuzzified out;
    for (const auto& [name, raw] : snapshot.values) {
        const Variable* v = vars.find(name);
        if (!v) throw UnknownVariable("snapshot names unregistered variable '" + name + "'");
        double x = raw;
        if (v->type == DataType::boolean) {
            x = (raw != 0.0) ? 1.0 : 0.0;
        } else if (!std::isfinite(x) || !v->universe.contains(x)) {
            x = std::isnan(x) ? v->universe.lo : v->universe.clamp(x);
            out.clamped.push_back(name);
        }
        for (const auto& t : v->terms) out.degrees[{name, t.label}] = evaluate(t.mf, x);
    }
    return out;
}

}  // namespace hearthguard::fuzzy
