#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "hearthguard/error.hpp"

namespace hearthguard::fuzzy {

struct Gaussian {
    double center = 0.0;
    double sigma = 1.0;
    bool operator==(const Gaussian&) const = default;
};

struct Triangular {
    double a = 0.0, b = 0.0, c = 0.0;
    bool operator==(const Triangular&) const = default;
};

struct Trapezoidal {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    bool operator==(const Trapezoidal&) const = default;
};

/// Degree 1 at exactly `value`, 0 elsewhere. Used for message-ID outputs.
struct Singleton {
    double value = 0.0;
    bool operator==(const Singleton&) const = default;
};

/// Crisp boolean term: matches a crisp input whose truth equals `value`.
struct CrispBool {
    bool value = true;
    bool operator==(const CrispBool&) const = default;
};

using MembershipFunction = std::variant<Gaussian, Triangular, Trapezoidal, Singleton, CrispBool>;

namespace detail {

// Piecewise-linear trapezoid. A vertical shoulder (a == b or c == d) belongs to the plateau.
inline double trapezoid(double x, double a, double b, double c, double d) {
    if (x < a || x > d) return 0.0;
    if (x >= b && x <= c) return 1.0;
    if (x < b) return (x - a) / (b - a);
    return (d - x) / (d - c);
}

}  // namespace detail

/// Degree of `x` in `mf`, always in [0,1]. Non-finite input yields 0.
inline double evaluate(const MembershipFunction& mf, double x) {
    if (!std::isfinite(x)) return 0.0;
    return std::visit(
        [x](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                const double z = x - f.center;
                return std::exp(-(z * z) / (2.0 * f.sigma * f.sigma));
            } else if constexpr (std::is_same_v<T, Triangular>) {
                return detail::trapezoid(x, f.a, f.b, f.b, f.c);
            } else if constexpr (std::is_same_v<T, Trapezoidal>) {
                return detail::trapezoid(x, f.a, f.b, f.c, f.d);
            } else if constexpr (std::is_same_v<T, Singleton>) {
                return x == f.value ? 1.0 : 0.0;
            } else {
                return ((x != 0.0) == f.value) ? 1.0 : 0.0;
            }
        },
        mf);
}

/// Throws InvalidModel when the parameters break the shape's ordering constraints.
inline void validate(const MembershipFunction& mf) {
    std::visit(
        [](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                if (!(f.sigma > 0.0) || !std::isfinite(f.center) || !std::isfinite(f.sigma))
                    throw InvalidModel("gaussian requires finite center and sigma > 0");
            } else if constexpr (std::is_same_v<T, Triangular>) {
                if (!(f.a <= f.b && f.b <= f.c)) throw InvalidModel("triangular requires a <= b <= c");
            } else if constexpr (std::is_same_v<T, Trapezoidal>) {
                if (!(f.a <= f.b && f.b <= f.c && f.c <= f.d))
                    throw InvalidModel("trapezoidal requires a <= b <= c <= d");
            } else if constexpr (std::is_same_v<T, Singleton>) {
                if (!std::isfinite(f.value)) throw InvalidModel("singleton value must be finite");
            }
        },
        mf);
}

inline const char* kind_name(const MembershipFunction& mf) {
    static constexpr const char* names[] = {"gaussian", "triangular", "trapezoidal", "singleton", "bool"};
    return names[mf.index()];
}

}  // namespace hearthguard::fuzzy
