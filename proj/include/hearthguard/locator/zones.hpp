#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hearthguard/error.hpp"
#include "hearthguard/locator/geometry.hpp"

namespace hearthguard::locator {

struct Zone {
    int id = 0;
    Box box;
    int imageMessageId = 0;
    bool operator==(const Zone&) const = default;
};

inline constexpr double kZoneNearBand = 0.3;  // m

/// Four 0.52 x 0.7 x 0.23 m floor zones, image messages 16-19.
inline std::vector<Zone> default_zones() {
    const Position size{0.52, 0.7, 0.23};
    return {{1, {{1.0, 1.0, 0.0}, size}, 16},
            {2, {{6.98, 1.0, 0.0}, size}, 17},
            {3, {{1.0, 2.9, 0.0}, size}, 18},
            {4, {{6.98, 2.9, 0.0}, size}, 19}};
}

/// Zone whose footprint contains `p` or lies within `band` of it.
///
/// Tested on the floor plan only, since the tag is worn well above zone height.
/// The closest candidate wins, then the lowest id, so the answer does not depend
/// on the order of `zones`.
inline std::optional<Zone> zone_check(const Position& p, const std::vector<Zone>& zones,
                                      double band = kZoneNearBand) {
    std::optional<Zone> best;
    double best_d = 0.0;
    for (const auto& z : zones) {
        const double d = z.box.footprint_distance(p);
        if (d > band) continue;
        if (!best || d < best_d || (d == best_d && z.id < best->id)) {
            best = z;
            best_d = d;
        }
    }
    return best;
}

/// Fixed object locations known to the server.
class ObjectRegistry {
public:
    void add(std::string id, Position p) { objects_[std::move(id)] = p; }
    bool contains(const std::string& id) const { return objects_.count(id) != 0; }
    const std::map<std::string, Position>& all() const { return objects_; }

    Position at(const std::string& id) const {
        auto it = objects_.find(id);
        if (it == objects_.end()) throw UnknownObject("unknown object '" + id + "'");
        return it->second;
    }

    double distance_to(const Position& p, const std::string& id) const { return distance(p, at(id)); }

private:
    std::map<std::string, Position> objects_;
};

inline double object_distance(const ObjectRegistry& reg, const Position& p, const std::string& id) {
    return reg.distance_to(p, id);
}

inline ObjectRegistry default_objects() {
    ObjectRegistry r;
    r.add("refrigerator", {4.25, 0.3, 1.0});
    r.add("wardrobe", {4.25, 4.3, 1.0});
    return r;
}

}  // namespace hearthguard::locator
