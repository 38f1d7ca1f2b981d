// Shared oracles for the test suite: brute-force correlators that mirror the
// definitions directly, plus a Kolmogorov-Smirnov distance.
#ifndef PPB_TEST_HELPERS_HPP
#define PPB_TEST_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ppb/events.hpp"
#include "ppb/histogram.hpp"

namespace oracle {

inline std::size_t bin_of(ppb::Timestamp delay, ppb::Timestamp lo, ppb::Timestamp res) {
    return static_cast<std::size_t>((delay - lo) / res);
}

/// Next-stop-per-start accumulation, written as the definition reads.
inline std::vector<std::uint64_t> start_stop(const ppb::EventStream& start,
                                             const ppb::EventStream& stop,
                                             ppb::Timestamp res, ppb::DelayRange r) {
    std::vector<std::uint64_t> counts((r.hi - r.lo + res - 1) / res, 0);
    for (const ppb::Timestamp s : start) {
        const ppb::Timestamp* best = nullptr;
        for (const ppb::Timestamp& t : stop)
            if (t >= s && (!best || t < *best)) best = &t;
        if (best) {
            const ppb::Timestamp d = *best - s;
            if (d >= r.lo && d < r.hi) ++counts[bin_of(d, r.lo, res)];
        }
    }
    return counts;
}

/// Next and previous stop per start.
inline std::vector<std::uint64_t> two_sided(const ppb::EventStream& start,
                                            const ppb::EventStream& stop,
                                            ppb::Timestamp res, ppb::DelayRange r) {
    std::vector<std::uint64_t> counts((r.hi - r.lo + res - 1) / res, 0);
    auto record = [&](ppb::Timestamp d) {
        if (d >= r.lo && d < r.hi) ++counts[bin_of(d, r.lo, res)];
    };
    for (const ppb::Timestamp s : start) {
        const ppb::Timestamp* next = nullptr;
        const ppb::Timestamp* prev = nullptr;
        for (const ppb::Timestamp& t : stop) {
            if (t >= s && (!next || t < *next)) next = &t;
            if (t < s && (!prev || t > *prev)) prev = &t;
        }
        if (next) record(*next - s);
        if (prev) record(*prev - s);
    }
    return counts;
}

/// All pairs.
inline std::vector<std::uint64_t> multi_stop(const ppb::EventStream& start,
                                             const ppb::EventStream& stop,
                                             ppb::Timestamp res, ppb::DelayRange r) {
    std::vector<std::uint64_t> counts((r.hi - r.lo + res - 1) / res, 0);
    for (const ppb::Timestamp s : start)
        for (const ppb::Timestamp t : stop) {
            const ppb::Timestamp d = t - s;
            if (d >= r.lo && d < r.hi) ++counts[bin_of(d, r.lo, res)];
        }
    return counts;
}

/// Every herald pair within the window contributes all probe delays from the
/// channel-a time.
inline std::vector<std::uint64_t> threefold(const ppb::EventStream& a,
                                            const ppb::EventStream& b,
                                            const ppb::EventStream& probe,
                                            ppb::Timestamp window, ppb::Timestamp res,
                                            ppb::DelayRange r, ppb::Timestamp center = 0) {
    std::vector<std::uint64_t> counts((r.hi - r.lo + res - 1) / res, 0);
    for (const ppb::Timestamp ta : a)
        for (const ppb::Timestamp tb : b) {
            if (std::abs(tb - ta - center) > window / 2) continue;
            for (const ppb::Timestamp tp : probe) {
                const ppb::Timestamp d = tp - ta;
                if (d >= r.lo && d < r.hi) ++counts[bin_of(d, r.lo, res)];
            }
        }
    return counts;
}

/// KS distance between an empirical sample and a continuous CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double c = cdf(sample[i]);
        d = std::max(d, std::abs(c - static_cast<double>(i) / n));
        d = std::max(d, std::abs(c - static_cast<double>(i + 1) / n));
    }
    return d;
}

/// Critical KS distance at significance 0.01 (large-sample approximation);
/// a statistic below this means p > 0.01.
inline double ks_critical_1pc(std::size_t n) {
    return 1.628 / std::sqrt(static_cast<double>(n));
}

} // namespace oracle

#endif
