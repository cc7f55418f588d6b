#pragma once

#include <cmath>
#include <optional>

#include "hearthguard/error.hpp"
#include "hearthguard/locator/geometry.hpp"

namespace hearthguard::locator {

struct MovementSample {
    Position position;
    double timestamp = 0.0;  // s
};

/// Daily time spent moving, in hours.
///
/// An interval counts as movement when the horizontal speed between its two
/// samples exceeds the threshold. The total resets when a sample falls on a new
/// day; `dayOffsetSeconds` is the wall-clock time at timestamp 0.
class MovementLedger {
public:
    explicit MovementLedger(double speedThreshold = 0.2, double dayOffsetSeconds = 0.0, double initialHours = 0.0)
        : speedThreshold_(speedThreshold), dayOffset_(dayOffsetSeconds), hours_(initialHours) {}

    void add(const MovementSample& s) {
        if (!std::isfinite(s.timestamp)) throw NonMonotonicTimestamp("timestamp is not finite");
        if (last_) {
            if (!(s.timestamp > last_->timestamp)) throw NonMonotonicTimestamp("timestamps must strictly increase");
            if (day_of(s.timestamp) != day_of(last_->timestamp)) {
                hours_ = 0.0;
            } else {
                const double dt = s.timestamp - last_->timestamp;
                const double speed = horizontal_distance(s.position, last_->position) / dt;
                if (speed > speedThreshold_) hours_ += dt / 3600.0;
            }
        }
        last_ = s;
    }
    void add(const Position& p, double t) { add(MovementSample{p, t}); }

    double hours() const { return hours_; }
    double speed_threshold() const { return speedThreshold_; }
    std::optional<MovementSample> last() const { return last_; }

private:
    long day_of(double t) const { return static_cast<long>(std::floor((t + dayOffset_) / 86400.0)); }

    double speedThreshold_;
    double dayOffset_;
    double hours_;
    std::optional<MovementSample> last_;
};

inline MovementLedger accumulate_movement(MovementLedger ledger, const MovementSample& s) {
    ledger.add(s);
    return ledger;
}

}  // namespace hearthguard::locator
