#pragma once

#include <random>
#include <string>
#include <vector>

#include "hearthguard/error.hpp"
#include "hearthguard/locator/geometry.hpp"

namespace hearthguard::locator {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct RangeMeasurement {
    std::string anchorId;
    double range = 0.0;  // m
    double timestamp = 0.0;
    bool operator==(const RangeMeasurement&) const = default;
};

using RangeSet = std::vector<RangeMeasurement>;

/// One range per anchor: true distance plus N(0, noise_sigma^2), clamped at 0.
template <typename Rng>
RangeSet simulate_ranges(const Position& truth, const AnchorSet& anchors, double noise_sigma, Rng& rng,
                         double timestamp = 0.0) {
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
    RangeSet out;
    out.reserve(anchors.anchors.size());
    std::normal_distribution<double> noise(0.0, 1.0);
    for (const auto& a : anchors.anchors) {
        double r = distance(truth, a.position);
        if (noise_sigma > 0.0) r += noise_sigma * noise(rng);
        out.push_back({a.id, std::max(r, 0.0), timestamp});
    }
    return out;
}

/// Durations of a double-sided two-way ranging exchange, as true (global) time.
///
///   tag:    poll --tRound1-- resp --tReply2-- final
///   anchor:      --tReply1--      --tRound2--
///
/// The tag measures tRound1 and tReply2 on its own clock, the anchor tReply1 and
/// tRound2 on its clock; each clock runs fast by its drift (ppm as a fraction).
struct TwrExchange {
    double tRound1 = 0.0;
    double tReply1 = 0.0;
    double tRound2 = 0.0;
    double tReply2 = 0.0;
    double clockDriftTag = 0.0;
    double clockDriftAnchor = 0.0;
};

/// Exchange for a true time of flight with the given reply delays.
inline TwrExchange make_exchange(double tof, double reply_anchor, double reply_tag, double drift_tag = 0.0,
                                 double drift_anchor = 0.0) {
    return {2 * tof + reply_anchor, reply_anchor, 2 * tof + reply_tag, reply_tag, drift_tag, drift_anchor};
}

/// Asymmetric DS-TWR estimate:
///   tof = (Ra*Rb - Da*Db) / (Ra + Rb + Da + Db)
/// evaluated on the drifted local measurements. The numerator is expanded as
/// (Ra - Da)*Rb + Da*(Rb - Db), which avoids cancelling two products of
/// millisecond durations that differ by nanoseconds.
inline double ds_twr_time_of_flight(const TwrExchange& ex) {
    if (!(ex.tRound1 > 0 && ex.tReply1 > 0 && ex.tRound2 > 0 && ex.tReply2 > 0))
        throw DegenerateExchange("all exchange durations must be positive");
    if (ex.tRound1 < ex.tReply1 || ex.tRound2 < ex.tReply2)
        throw DegenerateExchange("round trip shorter than the reply it contains");
    const double kt = 1.0 + ex.clockDriftTag;
    const double ka = 1.0 + ex.clockDriftAnchor;
    const double round1 = ex.tRound1 * kt;
    const double reply2 = ex.tReply2 * kt;
    const double reply1 = ex.tReply1 * ka;
    const double round2 = ex.tRound2 * ka;
    const double denom = round1 + round2 + reply1 + reply2;
    if (!(denom > 0.0)) throw DegenerateExchange("non-positive denominator");
    return ((round1 - reply1) * round2 + reply1 * (round2 - reply2)) / denom;
}

inline double ds_twr_range(const TwrExchange& ex) { return ds_twr_time_of_flight(ex) * kSpeedOfLight; }

}  // namespace hearthguard::locator
