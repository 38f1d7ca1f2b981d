#ifndef PPB_SIMULATE_HPP
#define PPB_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ppb/errors.hpp"
#include "ppb/events.hpp"
#include "ppb/rng.hpp"
#include "ppb/theory.hpp"

namespace ppb {

/// Pair-source generative parameters. Pair emissions follow a doubly
/// stochastic Poisson process: the intensity is piecewise constant over
/// exponentially distributed segments of mean length thermal_coherence_time,
/// with exponentially distributed levels of mean pair_rate. That is the
/// simplest process with g2(0) = 2 per mode and a tunable coherence time.
/// thermal_coherence_time = 0 selects a plain homogeneous Poisson source.
struct SourceConfig {
    double pair_rate = 0.0;               // generated pairs per second
    TwoPhotonWaveform waveform;           // idler-signal delay density
    double thermal_coherence_time = 0.0;  // s
    double background_rate_signal = 0.0;  // cps, uncorrelated
    double background_rate_idler = 0.0;   // cps, uncorrelated
    double duration = 1.0;                // acquisition time, s
    std::uint64_t seed = 1;

    void validate() const {
        if (pair_rate < 0.0 || background_rate_signal < 0.0 || background_rate_idler < 0.0)
            throw validation_error("source config: rates must be non-negative");
        if (thermal_coherence_time < 0.0)
            throw validation_error("source config: coherence time must be non-negative");
        if (!(duration > 0.0))
            throw validation_error("source config: duration must be positive");
        if (pair_rate > 0.0) waveform.validate();
    }
};

/// Lumped detector imperfections: efficiency covers filter transmission,
/// fiber coupling and quantum efficiency in one probability.
struct DetectorConfig {
    double efficiency = 1.0;   // [0, 1]
    double jitter_sigma = 0.0; // s, Gaussian timing spread
    double dead_time = 50e-9;  // s, non-paralyzable
    double dark_rate = 0.0;    // cps

    void validate() const {
        if (efficiency < 0.0 || efficiency > 1.0)
            throw validation_error("detector config: efficiency must be in [0, 1]");
        if (jitter_sigma < 0.0)
            throw validation_error("detector config: jitter sigma must be non-negative");
        if (dead_time < 0.0)
            throw validation_error("detector config: dead time must be non-negative");
        if (dark_rate < 0.0)
            throw validation_error("detector config: dark rate must be non-negative");
    }
};

namespace detail {

inline void append_poisson_stream(EventStream& out, Rng& rng, double rate, double duration) {
    if (rate <= 0.0) return;
    double t = rng.exponential(1.0 / rate);
    while (t < duration) {
        out.push_back(to_ps(t));
        t += rng.exponential(1.0 / rate);
    }
}

/// Sort a stream whose elements sit close to their final positions (idler
/// delays, timing jitter). Insertion sort with a work bound; falls back to
/// std::sort when the disorder turns out to be large.
inline void adaptive_sort(EventStream& v) {
    const std::size_t budget = 64 * v.size() + 1024;
    std::size_t work = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        Timestamp key = v[i];
        std::size_t j = i;
        while (j > 0 && v[j - 1] > key) {
            v[j] = v[j - 1];
            --j;
            if (++work > budget) {
                v[j] = key;
                std::sort(v.begin(), v.end());
                return;
            }
        }
        v[j] = key;
    }
}

/// Append a sorted tail and merge it into an already sorted head.
inline void merge_sorted_tail(EventStream& head, std::size_t head_size) {
    std::inplace_merge(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(head_size),
                       head.end());
}

} // namespace detail

/// Generate ideal (pre-detector) signal and idler streams. Signal events mark
/// pair emission times; idler events trail them by a waveform draw. Identical
/// configs give bit-identical streams.
inline std::pair<EventStream, EventStream> simulate_source(const SourceConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    Rng pair_rng = rng.fork(1);
    Rng bg_s_rng = rng.fork(2);
    Rng bg_i_rng = rng.fork(3);

    EventStream signal, idler;
    if (cfg.pair_rate > 0.0) {
        const auto expected = static_cast<std::size_t>(cfg.pair_rate * cfg.duration * 1.05) + 16;
        signal.reserve(expected);
        idler.reserve(expected);
        auto emit_pair = [&](double t_emit) {
            signal.push_back(to_ps(t_emit));
            const double delay = cfg.waveform.sample_delay(pair_rng.uniform());
            idler.push_back(to_ps(t_emit + delay));
        };
        if (cfg.thermal_coherence_time > 0.0) {
            double t = 0.0;
            while (t < cfg.duration) {
                const double seg_len = pair_rng.exponential(cfg.thermal_coherence_time);
                const double seg_end = std::min(t + seg_len, cfg.duration);
                const double intensity = pair_rng.exponential(cfg.pair_rate);
                if (intensity > 0.0) {
                    double te = t + pair_rng.exponential(1.0 / intensity);
                    while (te < seg_end) {
                        emit_pair(te);
                        te += pair_rng.exponential(1.0 / intensity);
                    }
                }
                t += seg_len;
            }
        } else {
            double te = pair_rng.exponential(1.0 / cfg.pair_rate);
            while (te < cfg.duration) {
                emit_pair(te);
                te += pair_rng.exponential(1.0 / cfg.pair_rate);
            }
        }
    }

    // Pair emissions come out in time order on the signal side; the idler
    // side is only locally disordered by the delay draws.
    detail::adaptive_sort(idler);
    const std::size_t n_pairs_s = signal.size();
    const std::size_t n_pairs_i = idler.size();
    detail::append_poisson_stream(signal, bg_s_rng, cfg.background_rate_signal, cfg.duration);
    detail::append_poisson_stream(idler, bg_i_rng, cfg.background_rate_idler, cfg.duration);
    detail::merge_sorted_tail(signal, n_pairs_s);
    detail::merge_sorted_tail(idler, n_pairs_i);
    return {std::move(signal), std::move(idler)};
}

/// Push an ideal stream through one detector: efficiency thinning, dark
/// counts, Gaussian jitter, then non-paralyzable dead time. Events jittered
/// before acquisition start are dropped; the output is strictly ordered with
/// a minimum gap of dead_time.
inline EventStream apply_detector(const EventStream& stream, const DetectorConfig& det,
                                  double duration, std::uint64_t seed) {
    det.validate();
    if (!(duration > 0.0))
        throw validation_error("apply_detector: duration must be positive");
    if (!is_time_sorted(stream))
        throw validation_error("apply_detector: input stream must be time-sorted");

    Rng rng(seed);
    Rng thin_rng = rng.fork(1);
    Rng dark_rng = rng.fork(2);
    Rng jitter_rng = rng.fork(3);

    EventStream kept;
    kept.reserve(static_cast<std::size_t>(static_cast<double>(stream.size()) * det.efficiency) + 16);
    if (det.efficiency >= 1.0) {
        kept = stream;
    } else if (det.efficiency > 0.0) {
        for (const Timestamp t : stream)
            if (thin_rng.bernoulli(det.efficiency)) kept.push_back(t);
    }

    const std::size_t n_photon = kept.size();
    detail::append_poisson_stream(kept, dark_rng, det.dark_rate, duration);
    detail::merge_sorted_tail(kept, n_photon);

    if (det.jitter_sigma > 0.0) {
        const double sigma_ps = det.jitter_sigma * PS_PER_S;
        EventStream jittered;
        jittered.reserve(kept.size());
        for (const Timestamp t : kept) {
            const auto shifted =
                t + static_cast<Timestamp>(std::llround(jitter_rng.normal(0.0, sigma_ps)));
            if (shifted >= 0) jittered.push_back(shifted);
        }
        kept = std::move(jittered);
        detail::adaptive_sort(kept);
    }

    if (det.dead_time > 0.0 && !kept.empty()) {
        const Timestamp dead_ps = to_ps(det.dead_time);
        EventStream out;
        out.reserve(kept.size());
        Timestamp last = kept.front();
        out.push_back(last);
        for (std::size_t i = 1; i < kept.size(); ++i) {
            if (kept[i] - last >= dead_ps) {
                out.push_back(kept[i]);
                last = kept[i];
            }
        }
        return out;
    }
    return kept;
}

/// Lossless probabilistic routing: every input event lands on exactly one
/// output, A with the given transmittance.
inline std::pair<EventStream, EventStream> beam_splitter(const EventStream& stream,
                                                         double transmittance,
                                                         std::uint64_t seed) {
    if (transmittance < 0.0 || transmittance > 1.0)
        throw validation_error("beam_splitter: transmittance must be in [0, 1]");
    Rng rng(seed);
    EventStream a, b;
    a.reserve(static_cast<std::size_t>(static_cast<double>(stream.size()) * transmittance) + 16);
    b.reserve(stream.size() - std::min(stream.size(), a.capacity()) + 16);
    for (const Timestamp t : stream) {
        if (rng.bernoulli(transmittance))
            a.push_back(t);
        else
            b.push_back(t);
    }
    return {std::move(a), std::move(b)};
}

} // namespace ppb

#endif
