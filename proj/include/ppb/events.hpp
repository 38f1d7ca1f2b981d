#ifndef PPB_EVENTS_HPP
#define PPB_EVENTS_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

namespace ppb {

/// Timestamps are integer picoseconds since acquisition start.
using Timestamp = std::int64_t;

/// One detection record as it appears in event files.
struct DetectionEvent {
    std::uint8_t channel = 0;
    std::uint64_t timestamp_ps = 0;
};

/// A single channel's detections, time-ordered. This is the currency between
/// the simulator and the analysis engine; all analysis assumes sorted input.
using EventStream = std::vector<Timestamp>;

inline bool is_time_sorted(const EventStream& s) {
    return std::is_sorted(s.begin(), s.end());
}

inline constexpr double PS_PER_S = 1e12;

inline Timestamp to_ps(double seconds) {
    return static_cast<Timestamp>(std::llround(seconds * PS_PER_S));
}

inline double to_seconds(Timestamp ps) { return static_cast<double>(ps) / PS_PER_S; }

} // namespace ppb

#endif
