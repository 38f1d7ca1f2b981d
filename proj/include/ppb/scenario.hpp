#ifndef PPB_SCENARIO_HPP
#define PPB_SCENARIO_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppb/analyze.hpp"
#include "ppb/errors.hpp"
#include "ppb/events.hpp"
#include "ppb/histogram.hpp"
#include "ppb/io.hpp"
#include "ppb/rng.hpp"
#include "ppb/simulate.hpp"
#include "ppb/theory.hpp"
#include "ppb/version.hpp"

namespace ppb {

/// What the analysis stage computes and how it bins.
struct AnalysisConfig {
    Timestamp resolution_ps = 4;
    Timestamp rebin_ps = 300;
    double window_s = 4.1e-9;        // coincidence window
    double herald_window_s = 3.3e-9; // D1-D2 window of the conditional setup
    double range_s = 50e-9;          // histogram span
    bool multi_stop = false;         // full correlator instead of start-stop
    bool peak_search = true;         // report g(0) at the located peak

    void validate() const {
        if (resolution_ps < 1) throw validation_error("analysis: resolution must be >= 1 ps");
        if (rebin_ps < resolution_ps || rebin_ps % resolution_ps != 0)
            throw validation_error("analysis: rebin width must be a multiple of the resolution");
        if (!(window_s > 0.0) || !(herald_window_s > 0.0))
            throw validation_error("analysis: windows must be positive");
        if (!(range_s > 0.0)) throw validation_error("analysis: range must be positive");
    }
};

/// How the waveform fed to the source is produced.
struct WaveformSpec {
    std::string model = "doppler"; // "doppler" | "exponential"
    double tau_min = -2e-9;
    double tau_max = 22e-9;
    std::size_t points = 3001;
    std::size_t velocity_points = 512;
    double exp_rate = 0.0; // 1/s, for the exponential model; 0 = gamma_e

    void validate() const {
        if (model != "doppler" && model != "exponential")
            throw validation_error("waveform: model must be 'doppler' or 'exponential'");
        if (!(tau_max > tau_min)) throw validation_error("waveform: tau_max must exceed tau_min");
        if (points < 16) throw validation_error("waveform: need at least 16 grid points");
        if (velocity_points < 64)
            throw validation_error("waveform: need at least 64 velocity points");
        if (exp_rate < 0.0) throw validation_error("waveform: exp_rate must be non-negative");
    }
};

/// One reproducible experiment: source, detector chain, topology, analysis.
struct Scenario {
    std::string name = "scenario";
    std::string topology = "cross"; // cross | hbt | conditional | survey
    double duration = 5.0;          // desk-scale acquisition, s
    double full_duration = 30.0;    // --full acquisition, s
    std::uint64_t seed = 1;

    double pair_rate = 0.0;
    double thermal_coherence_time = 0.0;
    double background_rate_signal = 0.0;
    double background_rate_idler = 0.0;

    AtomicParams atomic;
    WaveformSpec waveform;

    DetectorConfig det_signal;
    DetectorConfig det_idler;

    AnalysisConfig analysis;

    void validate() const {
        if (name.empty()) throw validation_error("scenario: name must not be empty");
        if (topology != "cross" && topology != "hbt" && topology != "conditional" &&
            topology != "survey")
            throw validation_error("scenario: unknown topology '" + topology + "'");
        if (!(duration > 0.0) || !(full_duration > 0.0))
            throw validation_error("scenario: durations must be positive");
        if (pair_rate < 0.0 || background_rate_signal < 0.0 || background_rate_idler < 0.0)
            throw validation_error("scenario: rates must be non-negative");
        if (thermal_coherence_time < 0.0)
            throw validation_error("scenario: coherence time must be non-negative");
        atomic.validate();
        waveform.validate();
        det_signal.validate();
        det_idler.validate();
        analysis.validate();
        const double span = to_seconds(to_ps(analysis.range_s));
        if (waveform.model == "doppler" && pair_rate > 0.0 && waveform.tau_max > span)
            throw validation_error("scenario: waveform grid extends beyond the analysis range");
    }

    /// Canonical serialization; identical scenarios hash identically no matter
    /// how they were produced (file or code).
    std::string canonical_text() const {
        std::ostringstream ss;
        ss.precision(17);
        ss << "name=" << name << "\ntopology=" << topology << "\nduration=" << duration
           << "\nfull_duration=" << full_duration << "\nseed=" << seed
           << "\npair_rate=" << pair_rate << "\ntau_c=" << thermal_coherence_time
           << "\nbg_s=" << background_rate_signal << "\nbg_i=" << background_rate_idler
           << "\natomic=" << atomic.gamma_e << ',' << atomic.gamma_d << ',' << atomic.delta_p
           << ',' << atomic.delta_c << ',' << atomic.lambda_p << ',' << atomic.lambda_c << ','
           << atomic.lambda_s << ',' << atomic.lambda_i << ',' << atomic.temperature << ','
           << atomic.atomic_mass << ',' << atomic.doppler_phase_scale
           << "\nwaveform=" << waveform.model << ',' << waveform.tau_min << ','
           << waveform.tau_max << ',' << waveform.points << ',' << waveform.velocity_points
           << ',' << waveform.exp_rate << "\ndet_s=" << det_signal.efficiency << ','
           << det_signal.jitter_sigma << ',' << det_signal.dead_time << ','
           << det_signal.dark_rate << "\ndet_i=" << det_idler.efficiency << ','
           << det_idler.jitter_sigma << ',' << det_idler.dead_time << ','
           << det_idler.dark_rate << "\nanalysis=" << analysis.resolution_ps << ','
           << analysis.rebin_ps << ',' << analysis.window_s << ',' << analysis.herald_window_s
           << ',' << analysis.range_s << ',' << analysis.multi_stop << ','
           << analysis.peak_search << '\n';
        return ss.str();
    }

    std::uint64_t hash() const { return fnv1a64(canonical_text()); }

    static Scenario from_config(const ConfigText& cfg) {
        Scenario s;
        s.name = cfg.get_string("name");
        s.topology = cfg.get_string("topology", "cross");
        s.duration = cfg.get_double("duration", 5.0);
        s.full_duration = cfg.get_double("full_duration", s.duration);
        s.seed = cfg.get_u64("seed", 1);

        s.pair_rate = cfg.get_double("source.pair_rate", 0.0);
        s.thermal_coherence_time = cfg.get_double("source.thermal_coherence_time_ns", 0.0) * 1e-9;
        s.background_rate_signal = cfg.get_double("source.background_signal", 0.0);
        s.background_rate_idler = cfg.get_double("source.background_idler", 0.0);

        if (cfg.has("waveform.model")) s.waveform.model = cfg.get_string("waveform.model");
        s.waveform.tau_min = cfg.get_double("waveform.tau_min_ns", s.waveform.tau_min * 1e9) * 1e-9;
        s.waveform.tau_max = cfg.get_double("waveform.tau_max_ns", s.waveform.tau_max * 1e9) * 1e-9;
        s.waveform.points = static_cast<std::size_t>(
            cfg.get_int("waveform.points", static_cast<std::int64_t>(s.waveform.points)));
        s.waveform.velocity_points = static_cast<std::size_t>(cfg.get_int(
            "waveform.velocity_points", static_cast<std::int64_t>(s.waveform.velocity_points)));
        s.waveform.exp_rate = cfg.get_double("waveform.exp_rate", 0.0);
        s.atomic.temperature = cfg.get_double("waveform.temperature_c", 52.0) + 273.15;
        s.atomic.lambda_i = cfg.get_double("waveform.lambda_i_nm", 780.2) * 1e-9;
        s.atomic.doppler_phase_scale =
            cfg.get_double("waveform.doppler_phase_scale", s.atomic.doppler_phase_scale);

        auto load_det = [&](const std::string& sec, DetectorConfig& det) {
            det.efficiency = cfg.get_double(sec + ".efficiency", 1.0);
            det.jitter_sigma = cfg.get_double(sec + ".jitter_sigma_ps", 0.0) * 1e-12;
            det.dead_time = cfg.get_double(sec + ".dead_time_ns", 0.0) * 1e-9;
            det.dark_rate = cfg.get_double(sec + ".dark_rate", 0.0);
        };
        load_det("detector.signal", s.det_signal);
        load_det("detector.idler", s.det_idler);

        s.analysis.resolution_ps =
            static_cast<Timestamp>(cfg.get_int("analysis.resolution_ps", 4));
        s.analysis.rebin_ps = static_cast<Timestamp>(cfg.get_int("analysis.rebin_ps", 300));
        s.analysis.window_s = cfg.get_double("analysis.window_ns", 4.1) * 1e-9;
        s.analysis.herald_window_s = cfg.get_double("analysis.herald_window_ns", 3.3) * 1e-9;
        s.analysis.range_s = cfg.get_double("analysis.range_ns", 50.0) * 1e-9;
        s.analysis.multi_stop = cfg.get_string("analysis.correlator", "start-stop") == "multi-stop";
        s.analysis.peak_search = cfg.get_string("analysis.peak_search", "true") != "false";

        s.validate();
        return s;
    }

    static Scenario from_file(const std::filesystem::path& path) {
        return from_config(ConfigText::parse_file(path));
    }
};

/// Everything one run produced, in memory.
struct ScenarioResult {
    std::string name;
    double duration = 0.0;
    std::uint64_t seed = 0;
    TwoPhotonWaveform waveform;             // empty grid when pair_rate = 0
    RateReport rates;                        // cross / survey topologies
    std::map<std::string, CorrelationCurve> curves;
    std::map<std::string, double> scalars;
    std::optional<GaussianFit> fit_signal;
    std::optional<GaussianFit> fit_idler;
};

struct RunManifest {
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::string version;
    double runtime_s = 0.0;
    std::vector<std::pair<std::string, std::string>> output_checksums;
};

namespace detail {

inline TwoPhotonWaveform build_waveform(const Scenario& sc) {
    if (sc.waveform.model == "exponential") {
        const double rate = sc.waveform.exp_rate > 0.0 ? sc.waveform.exp_rate : sc.atomic.gamma_e;
        TwoPhotonWaveform wf;
        wf.tau_grid = uniform_tau_grid(std::max(0.0, sc.waveform.tau_min), sc.waveform.tau_max,
                                       sc.waveform.points);
        wf.amplitude.resize(wf.tau_grid.size());
        wf.density.resize(wf.tau_grid.size());
        double integral = 0.0;
        const double dt = wf.tau_grid[1] - wf.tau_grid[0];
        for (std::size_t i = 0; i < wf.tau_grid.size(); ++i)
            wf.density[i] = rate * std::exp(-rate * wf.tau_grid[i]);
        for (std::size_t i = 0; i + 1 < wf.density.size(); ++i)
            integral += 0.5 * (wf.density[i] + wf.density[i + 1]) * dt;
        for (std::size_t i = 0; i < wf.density.size(); ++i) {
            wf.density[i] /= integral;
            wf.amplitude[i] = std::sqrt(wf.density[i]);
        }
        return wf;
    }
    const auto grid = uniform_tau_grid(sc.waveform.tau_min, sc.waveform.tau_max,
                                       sc.waveform.points);
    return doppler_averaged_g2(grid, sc.atomic, sc.waveform.velocity_points);
}

struct DetectedPair {
    EventStream signal;
    EventStream idler;
};

inline DetectedPair simulate_detected(const Scenario& sc, const TwoPhotonWaveform& wf,
                                      double duration, std::uint64_t seed) {
    SourceConfig src;
    src.pair_rate = sc.pair_rate;
    src.waveform = wf;
    src.thermal_coherence_time = sc.thermal_coherence_time;
    src.background_rate_signal = sc.background_rate_signal;
    src.background_rate_idler = sc.background_rate_idler;
    src.duration = duration;
    src.seed = seed;
    auto [s_ideal, i_ideal] = simulate_source(src);
    Rng seeder(seed);
    DetectedPair out;
    out.signal = apply_detector(s_ideal, sc.det_signal, duration, seeder.fork(101).next_u64());
    s_ideal = EventStream{}; // release before the idler pass
    out.idler = apply_detector(i_ideal, sc.det_idler, duration, seeder.fork(102).next_u64());
    return out;
}

/// Split one detected mode with an ideal 50/50 splitter in front of two
/// detectors of the same configuration.
inline DetectedPair simulate_hbt_arms(const EventStream& ideal_mode, const DetectorConfig& det,
                                      double duration, std::uint64_t seed) {
    Rng seeder(seed);
    auto [arm_a, arm_b] = beam_splitter(ideal_mode, 0.5, seeder.fork(201).next_u64());
    DetectedPair out;
    out.signal = apply_detector(arm_a, det, duration, seeder.fork(202).next_u64());
    out.idler = apply_detector(arm_b, det, duration, seeder.fork(203).next_u64());
    return out;
}

inline double curve_value_at(const CorrelationCurve& c, bool peak_search, double tau_ps,
                             double* sigma_out = nullptr) {
    std::size_t idx;
    if (peak_search) {
        idx = c.peak_index();
    } else {
        const auto maybe = c.bin_at(tau_ps);
        if (!maybe) throw validation_error("analysis: requested delay outside the range");
        idx = *maybe;
    }
    if (sigma_out) *sigma_out = c.sigma_g2[idx];
    return c.g2[idx];
}

} // namespace detail

/// Cross-correlation leg: histogram D1 (signal) against D2 (idler), Eq. (1)
/// normalization, coincidence budget and rate report.
inline void run_cross_leg(const Scenario& sc, const TwoPhotonWaveform& wf, double duration,
                          std::uint64_t seed, ScenarioResult& result) {
    const auto det = detail::simulate_detected(sc, wf, duration, seed);
    const auto& a = sc.analysis;
    const DelayRange range{0, to_ps(a.range_s)};
    Histogram h = a.multi_stop
                      ? multi_stop_histogram(det.signal, det.idler, a.resolution_ps, range,
                                             duration)
                      : start_stop_histogram(det.signal, det.idler, a.resolution_ps, range,
                                             duration);
    if (a.rebin_ps > a.resolution_ps) h = rebin(h, a.rebin_ps);
    CorrelationCurve g_si = normalize_cross_correlation(h);

    const auto coinc = coincidence_count(det.signal, det.idler, a.window_s, duration);
    RateReport rates;
    rates.window = a.window_s;
    rates.n_s = dead_time_correct(static_cast<double>(det.signal.size()) / duration,
                                  sc.det_signal.dead_time);
    rates.n_i = dead_time_correct(static_cast<double>(det.idler.size()) / duration,
                                  sc.det_idler.dead_time);
    rates.n_c = coinc.net;
    if (coinc.net > 0.0) {
        rates.n_pair_estimate = pair_rate_estimate(rates.n_s, rates.n_i, coinc.net);
        rates.heralding_s = heralding_efficiency(coinc.net, rates.n_s);
        rates.heralding_i = heralding_efficiency(coinc.net, rates.n_i);
    }
    result.rates = rates;

    double sigma = 0.0;
    const double g0 = detail::curve_value_at(g_si, a.peak_search, 0.0, &sigma);
    result.scalars["g_si_0"] = g0;
    result.scalars["g_si_0_sigma"] = sigma;
    result.scalars["g_si_peak_tau_ps"] = g_si.peak_tau;
    result.scalars["g_si_fwhm_ns"] = g_si.fwhm_ps * 1e-3;
    result.scalars["n_s_cps"] = rates.n_s;
    result.scalars["n_i_cps"] = rates.n_i;
    result.scalars["n_c_cps"] = rates.n_c;
    result.scalars["raw_coincidence_cps"] = coinc.raw;
    result.scalars["accidental_cps"] = coinc.accidental;
    result.scalars["n_pair_estimate_hz"] = rates.n_pair_estimate;
    result.scalars["heralding_s"] = rates.heralding_s;
    result.scalars["heralding_i"] = rates.heralding_i;
    result.curves["gsi"] = std::move(g_si);
}

/// HBT leg for one mode: 50/50 split, two detectors, two-sided auto-correlation
/// with a Gaussian fit.
inline void run_hbt_leg(const Scenario& sc, const TwoPhotonWaveform& wf, double duration,
                        std::uint64_t seed, bool signal_mode, ScenarioResult& result) {
    SourceConfig src;
    src.pair_rate = sc.pair_rate;
    src.waveform = wf;
    src.thermal_coherence_time = sc.thermal_coherence_time;
    src.background_rate_signal = sc.background_rate_signal;
    src.background_rate_idler = sc.background_rate_idler;
    src.duration = duration;
    src.seed = seed;
    auto [s_ideal, i_ideal] = simulate_source(src);
    const EventStream& mode = signal_mode ? s_ideal : i_ideal;
    const DetectorConfig& det = signal_mode ? sc.det_signal : sc.det_idler;
    Rng seeder(seed);
    const auto arms = detail::simulate_hbt_arms(mode, det, duration,
                                                seeder.fork(signal_mode ? 301 : 302).next_u64());

    const auto& a = sc.analysis;
    const DelayRange range{-to_ps(a.range_s), to_ps(a.range_s)};
    CorrelationCurve g = auto_correlation(arms.signal, arms.idler, a.resolution_ps, range,
                                          duration, a.rebin_ps);
    const std::string key = signal_mode ? "gss" : "gii";
    double sigma = 0.0;
    const double g0 = detail::curve_value_at(g, false, 0.0, &sigma);
    result.scalars[key + "_0"] = g0;
    result.scalars[key + "_0_sigma"] = sigma;
    try {
        const GaussianFit fit = gaussian_fit(g);
        result.scalars[key + "_fit_0"] = fit.value_at_zero();
        if (signal_mode)
            result.fit_signal = fit;
        else
            result.fit_idler = fit;
    } catch (const numerical_error&) {
        // fit is advisory; the direct bin value is always reported
    }
    result.curves[key] = std::move(g);
}

/// Conditional HBT leg: heralded three-fold statistics and Eq. (4).
inline void run_conditional_leg(const Scenario& sc, const TwoPhotonWaveform& wf, double duration,
                                std::uint64_t seed, ScenarioResult& result) {
    SourceConfig src;
    src.pair_rate = sc.pair_rate;
    src.waveform = wf;
    src.thermal_coherence_time = sc.thermal_coherence_time;
    src.background_rate_signal = sc.background_rate_signal;
    src.background_rate_idler = sc.background_rate_idler;
    src.duration = duration;
    src.seed = seed;
    auto [s_ideal, i_ideal] = simulate_source(src);
    Rng seeder(seed);
    const EventStream d1 =
        apply_detector(s_ideal, sc.det_signal, duration, seeder.fork(401).next_u64());
    s_ideal = EventStream{};
    const auto arms =
        detail::simulate_hbt_arms(i_ideal, sc.det_idler, duration, seeder.fork(402).next_u64());
    const EventStream& d2 = arms.signal;
    const EventStream& d3 = arms.idler;

    const auto& a = sc.analysis;
    const DelayRange range{-to_ps(a.range_s), to_ps(a.range_s)};
    // Center the herald coincidence window on the measured D1-D2 arrival-delay
    // peak, as the hardware window would be; a window centered at zero clips
    // the true-pair delay distribution and overweights accidental heralds.
    const Histogram h_si1 = multi_stop_histogram(d1, d2, a.rebin_ps, range, duration);
    std::size_t si1_pk = 0;
    for (std::size_t i = 1; i < h_si1.counts.size(); ++i)
        if (h_si1.counts[i] > h_si1.counts[si1_pk]) si1_pk = i;
    const Timestamp herald_center = static_cast<Timestamp>(h_si1.bin_center(si1_pk));
    const Histogram h3 = threefold_histogram(d1, d2, d3, to_ps(a.herald_window_s), a.rebin_ps,
                                             range, duration, herald_center);
    const Histogram h_si2 = multi_stop_histogram(d1, d3, a.rebin_ps, range, duration);

    CorrelationCurve g_sii = normalize_cross_correlation(h3);
    // Evaluate the peak at the herald-coincidence delay (the bin where the
    // high-count D1-D3 histogram peaks) rather than the conditional curve's
    // own noisy argmax; the latter rides up on the maximum-order statistic.
    std::size_t si2_pk = 0;
    for (std::size_t i = 1; i < h_si2.counts.size(); ++i)
        if (h_si2.counts[i] > h_si2.counts[si2_pk]) si2_pk = i;
    result.scalars["g_sii_peak"] = g_sii.g2[si2_pk];
    result.scalars["g_sii_peak_sigma"] = g_sii.sigma_g2[si2_pk];
    result.scalars["g_sii_peak_tau_ps"] = g_sii.tau[si2_pk];
    result.scalars["g_sii_max"] = conditional_peak(g_sii);

    CorrelationCurve g_c = heralded_g2(h3, static_cast<double>(d1.size()),
                                       static_cast<double>(h3.n_start), h_si2);
    const HeraldedPoint point = heralded_g2_at_peak(g_c, h_si2);
    result.scalars["gc_0"] = point.g2;
    result.scalars["gc_0_sigma"] = point.sigma;
    result.scalars["gc_0_tau_ps"] = point.tau_ps;
    result.scalars["herald_pairs"] = static_cast<double>(h3.n_start);
    result.scalars["herald_center_ps"] = static_cast<double>(herald_center);
    result.curves["gsii"] = std::move(g_sii);
    result.curves["gc"] = std::move(g_c);
}

/// Execute a scenario end to end, in memory. Deterministic per (scenario, seed).
inline ScenarioResult run_scenario(const Scenario& sc,
                                   std::optional<std::uint64_t> seed_override = std::nullopt,
                                   bool full_scale = false) {
    sc.validate();
    const std::uint64_t seed = seed_override.value_or(sc.seed);
    const double duration = full_scale ? sc.full_duration : sc.duration;

    ScenarioResult result;
    result.name = sc.name;
    result.duration = duration;
    result.seed = seed;

    TwoPhotonWaveform wf; // stays empty for background-only runs
    if (sc.pair_rate > 0.0) {
        wf = detail::build_waveform(sc);
        result.waveform = wf;
        result.scalars["waveform_fwhm_ns"] = fwhm(wf) * 1e9;
        if (sc.waveform.model == "doppler")
            result.scalars["doppler_fwhm_mhz"] = doppler_fwhm_hz(sc.atomic) * 1e-6;
    }

    Rng seeder(seed);
    if (sc.topology == "cross") {
        run_cross_leg(sc, wf, duration, seeder.fork(1).next_u64(), result);
    } else if (sc.topology == "hbt") {
        run_hbt_leg(sc, wf, duration, seeder.fork(2).next_u64(), true, result);
        run_hbt_leg(sc, wf, duration, seeder.fork(3).next_u64(), false, result);
    } else if (sc.topology == "conditional") {
        run_conditional_leg(sc, wf, duration, seeder.fork(4).next_u64(), result);
    } else { // survey: cross + both autos, independent acquisitions
        run_cross_leg(sc, wf, duration, seeder.fork(1).next_u64(), result);
        run_hbt_leg(sc, wf, duration, seeder.fork(2).next_u64(), true, result);
        run_hbt_leg(sc, wf, duration, seeder.fork(3).next_u64(), false, result);
        const double g_si = result.scalars.at("g_si_0");
        const double g_ss = result.scalars.at("gss_0");
        const double g_ii = result.scalars.at("gii_0");
        const auto cs = cauchy_schwarz_R(g_si, g_ss, g_ii, result.scalars.at("g_si_0_sigma"),
                                         result.scalars.at("gss_0_sigma"),
                                         result.scalars.at("gii_0_sigma"));
        result.scalars["R"] = cs.R;
        result.scalars["R_sigma"] = cs.sigma_R;
    }
    return result;
}

inline std::string waveform_to_csv(const TwoPhotonWaveform& wf) {
    std::ostringstream ss;
    ss.precision(12);
    ss << "tau_ps, density, re_amplitude, im_amplitude\n";
    for (std::size_t i = 0; i < wf.tau_grid.size(); ++i)
        ss << wf.tau_grid[i] * 1e12 << ", " << wf.density[i] << ", " << wf.amplitude[i].real()
           << ", " << wf.amplitude[i].imag() << '\n';
    return ss.str();
}

inline std::string curve_to_csv(const CorrelationCurve& c) {
    std::ostringstream ss;
    ss.precision(12);
    ss << "tau_ps, g2, sigma\n";
    for (std::size_t i = 0; i < c.tau.size(); ++i) {
        if (!c.masked.empty() && c.masked[i]) continue;
        ss << c.tau[i] << ", " << c.g2[i] << ", " << c.sigma_g2[i] << '\n';
    }
    return ss.str();
}

inline std::string summary_text(const ScenarioResult& r) {
    std::ostringstream ss;
    ss.precision(10);
    ss << "name = " << r.name << "\nseed = " << r.seed << "\nduration_s = " << r.duration
       << '\n';
    for (const auto& [key, value] : r.scalars) ss << key << " = " << value << '\n';
    if (r.fit_signal)
        ss << "gss_fit = baseline " << r.fit_signal->baseline << ", amplitude "
           << r.fit_signal->amplitude << ", center_ps " << r.fit_signal->center << ", sigma_ps "
           << r.fit_signal->sigma << '\n';
    if (r.fit_idler)
        ss << "gii_fit = baseline " << r.fit_idler->baseline << ", amplitude "
           << r.fit_idler->amplitude << ", center_ps " << r.fit_idler->center << ", sigma_ps "
           << r.fit_idler->sigma << '\n';
    return ss.str();
}

/// Persist every curve, the waveform, a summary and a manifest. Writes are
/// atomic; the manifest checksums every other output.
inline RunManifest write_scenario_outputs(const Scenario& sc, const ScenarioResult& r,
                                          const std::filesystem::path& out_dir,
                                          double runtime_s = 0.0) {
    std::filesystem::create_directories(out_dir);
    RunManifest manifest;
    manifest.scenario_hash = hex64(sc.hash());
    manifest.seed = r.seed;
    manifest.version = VERSION;
    manifest.runtime_s = runtime_s;

    auto emit = [&](const std::string& file, const std::string& bytes) {
        write_file_atomic(out_dir / file, bytes);
        manifest.output_checksums.emplace_back(file, hex64(fnv1a64(bytes)));
    };

    for (const auto& [key, curve] : r.curves) emit(r.name + "_" + key + ".csv",
                                                   curve_to_csv(curve));
    if (!r.waveform.tau_grid.empty())
        emit(r.name + "_waveform.csv", waveform_to_csv(r.waveform));
    emit(r.name + "_summary.txt", summary_text(r));

    std::ostringstream ss;
    ss << "scenario_hash = " << manifest.scenario_hash << "\nseed = " << manifest.seed
       << "\nversion = " << manifest.version << "\nruntime_s = " << manifest.runtime_s << '\n';
    for (const auto& [file, sum] : manifest.output_checksums)
        ss << "output = " << file << ' ' << sum << '\n';
    write_file_atomic(out_dir / (r.name + "_manifest.txt"), ss.str());
    return manifest;
}

/// Load, run and persist in one step; returns the manifest.
inline RunManifest run_scenario_file(const std::filesystem::path& scenario_path,
                                     const std::filesystem::path& out_dir,
                                     std::optional<std::uint64_t> seed_override = std::nullopt,
                                     bool full_scale = false) {
    const Scenario sc = Scenario::from_file(scenario_path);
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioResult result = run_scenario(sc, seed_override, full_scale);
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return write_scenario_outputs(sc, result, out_dir, runtime);
}

} // namespace ppb

#endif
