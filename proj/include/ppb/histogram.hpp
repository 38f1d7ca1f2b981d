#ifndef PPB_HISTOGRAM_HPP
#define PPB_HISTOGRAM_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "ppb/errors.hpp"
#include "ppb/events.hpp"

namespace ppb {

/// Uniform-bin delay histogram plus the acquisition metadata every
/// normalization needs.
struct Histogram {
    Timestamp bin_width = 1;   // ps
    Timestamp origin = 0;      // ps, left edge of bin 0 (may be negative)
    std::vector<std::uint64_t> counts;
    double acquisition_time = 0.0; // s
    std::uint64_t n_start = 0;
    std::uint64_t n_stop = 0;

    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (const auto c : counts) s += c;
        return s;
    }

    double bin_center(std::size_t i) const {
        return static_cast<double>(origin) + (static_cast<double>(i) + 0.5) *
                                                 static_cast<double>(bin_width);
    }

    void validate() const {
        if (bin_width <= 0) throw validation_error("histogram: bin width must be positive");
        if (!(acquisition_time > 0.0))
            throw validation_error("histogram: acquisition time must be positive");
    }
};

/// Inclusive-exclusive delay range [lo, hi) in ps.
struct DelayRange {
    Timestamp lo = 0;
    Timestamp hi = 0;
};

namespace detail {

inline unsigned worker_count() {
    if (const char* env = std::getenv("PPB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

inline std::size_t bin_count(Timestamp lo, Timestamp hi, Timestamp res) {
    return static_cast<std::size_t>((hi - lo + res - 1) / res);
}

/// Run `kernel(begin, end, counts)` over contiguous shards of [0, n) and merge
/// the per-shard count arrays. Addition commutes, so the result does not
/// depend on the shard count.
template <typename Kernel>
std::vector<std::uint64_t> sharded_counts(std::size_t n, std::size_t n_bins, Kernel kernel) {
    unsigned workers = worker_count();
    if (n < 1u << 16) workers = 1;
    if (workers <= 1) {
        std::vector<std::uint64_t> counts(n_bins, 0);
        kernel(std::size_t{0}, n, counts);
        return counts;
    }
    std::vector<std::vector<std::uint64_t>> partial(workers,
                                                    std::vector<std::uint64_t>(n_bins, 0));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = std::min<std::size_t>(w * chunk, n);
        const std::size_t e = std::min<std::size_t>(b + chunk, n);
        pool.emplace_back([&, w, b, e] { kernel(b, e, partial[w]); });
    }
    for (auto& t : pool) t.join();
    std::vector<std::uint64_t> counts(n_bins, 0);
    for (const auto& p : partial)
        for (std::size_t i = 0; i < n_bins; ++i) counts[i] += p[i];
    return counts;
}

inline void require_sorted(const EventStream& s, const char* who) {
    if (!is_time_sorted(s))
        throw validation_error(std::string(who) + ": input streams must be time-sorted");
}

} // namespace detail

/// Classic TCSPC start-stop accumulation: each start event contributes the
/// delay to the next stop event (the first stop at or after the start); the
/// delay is binned if it falls inside the range. Single forward pass.
inline Histogram start_stop_histogram(const EventStream& start, const EventStream& stop,
                                      Timestamp resolution_ps, DelayRange range,
                                      double acquisition_time) {
    if (resolution_ps < 1)
        throw validation_error("start_stop_histogram: resolution must be >= 1 ps");
    if (!(range.hi > range.lo))
        throw validation_error("start_stop_histogram: empty delay range");
    detail::require_sorted(start, "start_stop_histogram");
    detail::require_sorted(stop, "start_stop_histogram");

    Histogram h;
    h.bin_width = resolution_ps;
    h.origin = range.lo;
    h.acquisition_time = acquisition_time;
    h.n_start = start.size();
    h.n_stop = stop.size();
    const std::size_t n_bins = detail::bin_count(range.lo, range.hi, resolution_ps);

    h.counts = detail::sharded_counts(
        start.size(), n_bins,
        [&](std::size_t b, std::size_t e, std::vector<std::uint64_t>& counts) {
            auto it = std::lower_bound(stop.begin(), stop.end(),
                                       b < start.size() ? start[b] : Timestamp{0});
            for (std::size_t i = b; i < e; ++i) {
                while (it != stop.end() && *it < start[i]) ++it;
                if (it == stop.end()) break;
                const Timestamp delay = *it - start[i];
                if (delay >= range.lo && delay < range.hi)
                    ++counts[static_cast<std::size_t>((delay - range.lo) / resolution_ps)];
            }
        });
    return h;
}

/// Two-sided start-stop: each start contributes the delay to the next stop
/// (non-negative bin) and to the previous stop (negative bin). The natural
/// accumulation for auto-correlations, where neither detector is privileged.
inline Histogram two_sided_histogram(const EventStream& start, const EventStream& stop,
                                     Timestamp resolution_ps, DelayRange range,
                                     double acquisition_time) {
    if (resolution_ps < 1)
        throw validation_error("two_sided_histogram: resolution must be >= 1 ps");
    if (!(range.hi > range.lo))
        throw validation_error("two_sided_histogram: empty delay range");
    detail::require_sorted(start, "two_sided_histogram");
    detail::require_sorted(stop, "two_sided_histogram");

    Histogram h;
    h.bin_width = resolution_ps;
    h.origin = range.lo;
    h.acquisition_time = acquisition_time;
    h.n_start = start.size();
    h.n_stop = stop.size();
    const std::size_t n_bins = detail::bin_count(range.lo, range.hi, resolution_ps);

    h.counts = detail::sharded_counts(
        start.size(), n_bins,
        [&](std::size_t b, std::size_t e, std::vector<std::uint64_t>& counts) {
            auto record = [&](Timestamp delay) {
                if (delay >= range.lo && delay < range.hi)
                    ++counts[static_cast<std::size_t>((delay - range.lo) / resolution_ps)];
            };
            auto it = std::lower_bound(stop.begin(), stop.end(),
                                       b < start.size() ? start[b] : Timestamp{0});
            for (std::size_t i = b; i < e; ++i) {
                while (it != stop.end() && *it < start[i]) ++it;
                if (it != stop.end()) record(*it - start[i]);
                if (it != stop.begin()) record(*(it - 1) - start[i]);
            }
        });
    return h;
}

/// Multi-stop correlator: every (start, stop) pair with a delay inside the
/// range contributes. Free of the start-stop tail droop at high rates.
inline Histogram multi_stop_histogram(const EventStream& start, const EventStream& stop,
                                      Timestamp resolution_ps, DelayRange range,
                                      double acquisition_time) {
    if (resolution_ps < 1)
        throw validation_error("multi_stop_histogram: resolution must be >= 1 ps");
    if (!(range.hi > range.lo))
        throw validation_error("multi_stop_histogram: empty delay range");
    detail::require_sorted(start, "multi_stop_histogram");
    detail::require_sorted(stop, "multi_stop_histogram");

    Histogram h;
    h.bin_width = resolution_ps;
    h.origin = range.lo;
    h.acquisition_time = acquisition_time;
    h.n_start = start.size();
    h.n_stop = stop.size();
    const std::size_t n_bins = detail::bin_count(range.lo, range.hi, resolution_ps);

    h.counts = detail::sharded_counts(
        start.size(), n_bins,
        [&](std::size_t b, std::size_t e, std::vector<std::uint64_t>& counts) {
            std::size_t lo_idx = 0;
            for (std::size_t i = b; i < e; ++i) {
                const Timestamp t = start[i];
                while (lo_idx < stop.size() && stop[lo_idx] - t < range.lo) ++lo_idx;
                for (std::size_t j = lo_idx; j < stop.size(); ++j) {
                    const Timestamp delay = stop[j] - t;
                    if (delay >= range.hi) break;
                    ++counts[static_cast<std::size_t>((delay - range.lo) / resolution_ps)];
                }
            }
        });
    return h;
}

/// Three-fold conditional accumulation: every (a, b) herald pair with
/// |t_b - t_a - herald_center| <= herald_window/2 contributes the delays from
/// t_a to every probe event inside the range. The center lets the herald
/// coincidence window sit on the (a, b) arrival-delay peak, as the hardware
/// window would. n_start reports the herald-pair count, n_stop the probe
/// singles, so Eq.-(1)-style normalization applies directly.
inline Histogram threefold_histogram(const EventStream& herald_a, const EventStream& herald_b,
                                     const EventStream& probe, Timestamp herald_window_ps,
                                     Timestamp bin_ps, DelayRange range,
                                     double acquisition_time, Timestamp herald_center = 0) {
    if (bin_ps < 1)
        throw validation_error("threefold_histogram: bin width must be >= 1 ps");
    if (herald_window_ps <= 0)
        throw validation_error("threefold_histogram: herald window must be positive");
    if (!(range.hi > range.lo))
        throw validation_error("threefold_histogram: empty delay range");
    detail::require_sorted(herald_a, "threefold_histogram");
    detail::require_sorted(herald_b, "threefold_histogram");
    detail::require_sorted(probe, "threefold_histogram");

    const Timestamp win_lo = herald_center - herald_window_ps / 2;
    const Timestamp win_hi = herald_center + herald_window_ps / 2;
    Histogram h;
    h.bin_width = bin_ps;
    h.origin = range.lo;
    h.acquisition_time = acquisition_time;
    h.n_stop = probe.size();
    const std::size_t n_bins = detail::bin_count(range.lo, range.hi, bin_ps);

    std::uint64_t n_pairs = 0;
    h.counts = detail::sharded_counts(
        herald_a.size(), n_bins,
        [&](std::size_t b, std::size_t e, std::vector<std::uint64_t>& counts) {
            std::size_t b_lo = 0, p_lo = 0;
            for (std::size_t i = b; i < e; ++i) {
                const Timestamp ta = herald_a[i];
                while (b_lo < herald_b.size() && herald_b[b_lo] < ta + win_lo) ++b_lo;
                std::size_t pairs_here = 0;
                for (std::size_t j = b_lo; j < herald_b.size(); ++j) {
                    if (herald_b[j] > ta + win_hi) break;
                    ++pairs_here;
                }
                if (pairs_here == 0) continue;
                while (p_lo < probe.size() && probe[p_lo] - ta < range.lo) ++p_lo;
                for (std::size_t k = p_lo; k < probe.size(); ++k) {
                    const Timestamp delay = probe[k] - ta;
                    if (delay >= range.hi) break;
                    const auto bin = static_cast<std::size_t>((delay - range.lo) / bin_ps);
                    counts[bin] += pairs_here;
                }
            }
        });

    // Herald-pair count, single pass (cheap relative to the probe scan).
    {
        std::size_t b_lo = 0;
        for (const Timestamp ta : herald_a) {
            while (b_lo < herald_b.size() && herald_b[b_lo] < ta + win_lo) ++b_lo;
            for (std::size_t j = b_lo; j < herald_b.size(); ++j) {
                if (herald_b[j] > ta + win_hi) break;
                ++n_pairs;
            }
        }
    }
    h.n_start = n_pairs;
    return h;
}

/// Sum counts into coarser bins. The new width must be an integer multiple of
/// the old; total counts are conserved exactly.
inline Histogram rebin(const Histogram& h, Timestamp new_bin_width) {
    h.validate();
    if (new_bin_width < h.bin_width || new_bin_width % h.bin_width != 0)
        throw validation_error("rebin: new width must be an integer multiple of the old");
    if (new_bin_width == h.bin_width) return h;
    const auto factor = static_cast<std::size_t>(new_bin_width / h.bin_width);
    Histogram out = h;
    out.bin_width = new_bin_width;
    out.counts.assign((h.counts.size() + factor - 1) / factor, 0);
    for (std::size_t i = 0; i < h.counts.size(); ++i) out.counts[i / factor] += h.counts[i];
    return out;
}

} // namespace ppb

#endif
