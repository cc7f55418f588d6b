#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hearthguard/error.hpp"

namespace hearthguard::locator {

/// Meters, room frame: x along the width, y along the depth, z up from the floor.
struct Position {
    double x = 0.0, y = 0.0, z = 0.0;
    bool operator==(const Position&) const = default;
};

inline double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

inline double horizontal_distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned box given by its minimum corner and extent.
struct Box {
    Position min;
    Position size;
    bool operator==(const Box&) const = default;

    Position max() const { return {min.x + size.x, min.y + size.y, min.z + size.z}; }
    Position center() const { return {min.x + size.x / 2, min.y + size.y / 2, min.z + size.z / 2}; }

    bool contains(const Position& p) const {
        const auto hi = max();
        return p.x >= min.x && p.x <= hi.x && p.y >= min.y && p.y <= hi.y && p.z >= min.z && p.z <= hi.z;
    }
    bool contains(const Box& inner) const { return contains(inner.min) && contains(inner.max()); }

    Position clamp(const Position& p) const {
        const auto hi = max();
        return {std::clamp(p.x, min.x, hi.x), std::clamp(p.y, min.y, hi.y), std::clamp(p.z, min.z, hi.z)};
    }

    /// Horizontal distance from `p` to the box footprint; 0 inside.
    double footprint_distance(const Position& p) const {
        const auto hi = max();
        const double dx = std::max({min.x - p.x, 0.0, p.x - hi.x});
        const double dy = std::max({min.y - p.y, 0.0, p.y - hi.y});
        return std::hypot(dx, dy);
    }
};

/// Room box anchored at the origin.
inline Box room_box(double width, double depth, double height) { return {{0, 0, 0}, {width, depth, height}}; }

inline Box default_room() { return room_box(8.5, 4.6, 2.0); }

struct Anchor {
    std::string id;
    Position position;
    bool operator==(const Anchor&) const = default;
};

struct AnchorSet {
    std::vector<Anchor> anchors;
    Box room = default_room();

    const Anchor* find(const std::string& id) const {
        auto it = std::find_if(anchors.begin(), anchors.end(), [&](const Anchor& a) { return a.id == id; });
        return it == anchors.end() ? nullptr : &*it;
    }

    /// All anchors at one height, so a range set cannot resolve z.
    bool coplanar_horizontal(double tol = 1e-9) const {
        for (const auto& a : anchors)
            if (std::abs(a.position.z - anchors.front().position.z) > tol) return false;
        return true;
    }

    /// Throws unless there are >= 3 anchors that are not collinear in plan view.
    void validate() const {
        if (anchors.size() < 3) throw InsufficientAnchors("at least 3 anchors are required");
        for (std::size_t i = 0; i < anchors.size(); ++i)
            for (std::size_t j = i + 1; j < anchors.size(); ++j)
                for (std::size_t k = j + 1; k < anchors.size(); ++k) {
                    const auto& a = anchors[i].position;
                    const auto& b = anchors[j].position;
                    const auto& c = anchors[k].position;
                    const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
                    if (std::abs(cross) > 1e-6) return;
                }
        throw DegenerateGeometry("anchors are collinear in the horizontal plane");
    }
};

/// Three anchors at 1.5 m in the room corners of the 8.5 x 4.6 m test room.
inline AnchorSet default_anchors() {
    return {{{"A1", {0.0, 0.0, 1.5}}, {"A2", {8.5, 0.0, 1.5}}, {"A3", {0.0, 4.6, 1.5}}}, default_room()};
}

}  // namespace hearthguard::locator
