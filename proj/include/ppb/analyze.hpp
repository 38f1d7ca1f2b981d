#ifndef PPB_ANALYZE_HPP
#define PPB_ANALYZE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ppb/errors.hpp"
#include "ppb/events.hpp"
#include "ppb/histogram.hpp"
#include "ppb/theory.hpp"

namespace ppb {

/// Normalized g2 curve with per-bin Poisson-propagated uncertainty.
struct CorrelationCurve {
    std::vector<double> tau;      // ps, bin centers
    std::vector<double> g2;       // dimensionless
    std::vector<double> sigma_g2; // statistical, same shape
    std::vector<bool> masked;     // true where the value is undefined
    double peak_value = 0.0;
    double peak_tau = 0.0;        // ps
    double fwhm_ps = 0.0;         // 0 when no peak was found

    std::size_t peak_index() const {
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g2.size(); ++i) {
            if (!masked.empty() && masked[i]) continue;
            if (g2[i] > best_v) {
                best_v = g2[i];
                best = i;
            }
        }
        return best;
    }

    /// Value at the bin containing the given delay, if inside the range.
    std::optional<std::size_t> bin_at(double tau_ps) const {
        if (tau.size() < 2) return std::nullopt;
        const double width = tau[1] - tau[0];
        const double left = tau.front() - 0.5 * width;
        if (tau_ps < left) return std::nullopt;
        const auto i = static_cast<std::size_t>((tau_ps - left) / width);
        if (i >= tau.size()) return std::nullopt;
        return i;
    }
};

/// Dead-time-corrected singles, net coincidences and the derived figures of
/// merit for one acquisition.
struct RateReport {
    double n_s = 0.0;             // cps, corrected
    double n_i = 0.0;             // cps, corrected
    double n_c = 0.0;             // cps, net
    double window = 0.0;          // s
    double n_pair_estimate = 0.0; // Hz
    double heralding_s = 0.0;
    double heralding_i = 0.0;
};

namespace detail {

inline void finalize_curve(CorrelationCurve& c) {
    // Peak bookkeeping plus FWHM when a peak exists; flat curves keep fwhm 0.
    if (c.g2.empty()) return;
    const std::size_t pk = c.peak_index();
    c.peak_value = c.g2[pk];
    c.peak_tau = c.tau[pk];
    try {
        c.fwhm_ps = fwhm(c.tau, c.g2);
    } catch (const numerical_error&) {
        c.fwhm_ps = 0.0;
    }
}

} // namespace detail

/// Eq.-(1) normalization: g2 = counts / (N_s N_I dtau T) with the singles
/// rates taken from the histogram metadata.
inline CorrelationCurve normalize_cross_correlation(const Histogram& h) {
    h.validate();
    if (h.n_start == 0 || h.n_stop == 0)
        throw numerical_error("normalize: zero singles rate on one channel");
    const double T = h.acquisition_time;
    const double rate_start = static_cast<double>(h.n_start) / T;
    const double rate_stop = static_cast<double>(h.n_stop) / T;
    const double dtau = static_cast<double>(h.bin_width) / PS_PER_S;
    const double denom = rate_start * rate_stop * dtau * T;

    CorrelationCurve c;
    c.tau.resize(h.counts.size());
    c.g2.resize(h.counts.size());
    c.sigma_g2.resize(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        c.tau[i] = h.bin_center(i);
        const auto n = static_cast<double>(h.counts[i]);
        c.g2[i] = n / denom;
        c.sigma_g2[i] = std::sqrt(n) / denom;
    }
    detail::finalize_curve(c);
    return c;
}

/// HBT auto-correlation of one mode from its two beam-splitter outputs:
/// two-sided start-stop histogram, Eq.-(1) normalized.
inline CorrelationCurve auto_correlation(const EventStream& a, const EventStream& b,
                                         Timestamp resolution_ps, DelayRange range,
                                         double acquisition_time,
                                         Timestamp rebin_ps = 0) {
    Histogram h = two_sided_histogram(a, b, resolution_ps, range, acquisition_time);
    if (rebin_ps > resolution_ps) h = rebin(h, rebin_ps);
    return normalize_cross_correlation(h);
}

/// Gaussian least-squares fit result.
struct GaussianFit {
    double baseline = 0.0;
    double amplitude = 0.0;
    double center = 0.0; // ps
    double sigma = 0.0;  // ps
    double residual_rms = 0.0;
    int iterations = 0;

    double value_at_zero() const {
        return baseline + amplitude * std::exp(-0.5 * center * center / (sigma * sigma));
    }
};

/// Levenberg-damped least squares of baseline + A exp(-(tau-c)^2 / 2 sigma^2).
/// Seeds from the curve itself: wing-median baseline, argmax center.
inline GaussianFit gaussian_fit(const CorrelationCurve& curve) {
    const std::size_t n = curve.g2.size();
    if (n < 10) throw validation_error("gaussian_fit: need at least 10 bins");

    std::size_t n_outer = std::max<std::size_t>(1, n / 10);
    std::vector<double> wings;
    for (std::size_t i = 0; i < n_outer; ++i) wings.push_back(curve.g2[i]);
    for (std::size_t i = n - n_outer; i < n; ++i) wings.push_back(curve.g2[i]);
    std::nth_element(wings.begin(), wings.begin() + wings.size() / 2, wings.end());

    std::array<double, 4> p; // baseline, amplitude, center, sigma
    p[0] = wings[wings.size() / 2];
    const std::size_t pk = curve.peak_index();
    p[1] = curve.g2[pk] - p[0];
    p[2] = curve.tau[pk];
    double width_guess = (curve.tau.back() - curve.tau.front()) / 10.0;
    try {
        width_guess = fwhm(curve.tau, curve.g2) / 2.3548;
    } catch (const numerical_error&) {
        // flat curve: keep the coarse guess, the fit will drive A to ~0
    }
    p[3] = std::max(width_guess, (curve.tau[1] - curve.tau[0]) * 0.5);

    auto chi2_of = [&](const std::array<double, 4>& q) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = (curve.tau[i] - q[2]) / q[3];
            const double r = curve.g2[i] - (q[0] + q[1] * std::exp(-0.5 * z * z));
            s += r * r;
        }
        return s;
    };

    double lambda = 1e-3;
    double chi2 = chi2_of(p);
    int iter = 0;
    for (; iter < 200; ++iter) {
        // Normal equations with analytic Jacobian.
        std::array<std::array<double, 4>, 4> jtj{};
        std::array<double, 4> jtr{};
        for (std::size_t i = 0; i < n; ++i) {
            const double z = (curve.tau[i] - p[2]) / p[3];
            const double e = std::exp(-0.5 * z * z);
            const double model = p[0] + p[1] * e;
            const double r = curve.g2[i] - model;
            const std::array<double, 4> j = {1.0, e, p[1] * e * z / p[3],
                                             p[1] * e * z * z / p[3]};
            for (int a = 0; a < 4; ++a) {
                jtr[a] += j[a] * r;
                for (int b = 0; b < 4; ++b) jtj[a][b] += j[a] * j[b];
            }
        }
        std::array<std::array<double, 5>, 4> m{};
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) m[a][b] = jtj[a][b];
            m[a][a] *= 1.0 + lambda;
            m[a][4] = jtr[a];
        }
        // Gaussian elimination with partial pivoting on the 4x5 system.
        bool singular = false;
        for (int col = 0; col < 4; ++col) {
            int piv = col;
            for (int r = col + 1; r < 4; ++r)
                if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
            if (std::abs(m[piv][col]) < 1e-300) {
                singular = true;
                break;
            }
            std::swap(m[piv], m[col]);
            for (int r = 0; r < 4; ++r) {
                if (r == col) continue;
                const double f = m[r][col] / m[col][col];
                for (int cidx = col; cidx < 5; ++cidx) m[r][cidx] -= f * m[col][cidx];
            }
        }
        if (singular) {
            lambda *= 10.0;
            if (lambda > 1e12)
                throw numerical_error("gaussian_fit: singular normal equations");
            continue;
        }
        std::array<double, 4> step;
        for (int a = 0; a < 4; ++a) step[a] = m[a][4] / m[a][a];

        std::array<double, 4> trial = {p[0] + step[0], p[1] + step[1], p[2] + step[2],
                                       p[3] + step[3]};
        if (trial[3] <= 0.0) trial[3] = p[3] * 0.5;
        const double trial_chi2 = chi2_of(trial);
        if (trial_chi2 <= chi2) {
            double rel = 0.0;
            for (int a = 0; a < 4; ++a)
                rel = std::max(rel, std::abs(trial[a] - p[a]) /
                                        std::max(std::abs(p[a]), 1e-12));
            p = trial;
            chi2 = trial_chi2;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (rel < 1e-8) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    if (iter >= 200 && lambda > 1e10)
        throw numerical_error("gaussian_fit: no convergence after 200 iterations (lambda " +
                              std::to_string(lambda) + ")");

    GaussianFit fit;
    fit.baseline = p[0];
    fit.amplitude = p[1];
    fit.center = p[2];
    fit.sigma = std::abs(p[3]);
    fit.residual_rms = std::sqrt(chi2 / static_cast<double>(n));
    fit.iterations = iter;
    return fit;
}

/// Raw / accidental / net coincidence rates in cps.
struct CoincidenceRates {
    double raw = 0.0;
    double accidental = 0.0;
    double net = 0.0;
    double peak_delay_ps = 0.0; // window center actually used
    std::uint64_t raw_count = 0;
};

/// Coincidence counting in a window centered on the correlation peak.
/// Events pair greedily, nearest delay first within each window, each event
/// used at most once; accidentals come from the flat wings of a survey
/// histogram scaled to the window.
inline CoincidenceRates coincidence_count(const EventStream& a, const EventStream& b,
                                          double window_s, double acquisition_time) {
    if (!(window_s > 0.0)) throw validation_error("coincidence_count: window must be positive");
    if (!(acquisition_time > 0.0))
        throw validation_error("coincidence_count: acquisition time must be positive");
    detail::require_sorted(a, "coincidence_count");
    detail::require_sorted(b, "coincidence_count");
    CoincidenceRates out;
    if (a.empty() || b.empty()) return out;

    const Timestamp window_ps = std::max<Timestamp>(1, to_ps(window_s));
    const Timestamp half = window_ps / 2;

    // Locate the correlation peak on a coarse survey histogram. A flat
    // (uncorrelated) histogram just yields some noise bin; raw then matches
    // the accidental estimate, which is the correct degenerate behavior.
    const Timestamp survey_span = std::max<Timestamp>(window_ps * 16, to_ps(100e-9));
    const Timestamp survey_res = std::max<Timestamp>(1, window_ps / 8);
    Histogram survey = multi_stop_histogram(a, b, survey_res, {-survey_span, survey_span},
                                            acquisition_time);
    std::size_t pk = 0;
    for (std::size_t i = 1; i < survey.counts.size(); ++i)
        if (survey.counts[i] > survey.counts[pk]) pk = i;
    const auto center = static_cast<Timestamp>(std::llround(survey.bin_center(pk)));
    out.peak_delay_ps = static_cast<double>(center);

    // Greedy nearest match around the peak delay.
    std::vector<bool> used(b.size(), false);
    std::size_t lo = 0;
    std::uint64_t raw = 0;
    for (const Timestamp ta : a) {
        const Timestamp want = ta + center;
        while (lo < b.size() && (b[lo] < want - half || used[lo])) ++lo;
        std::size_t best = b.size();
        Timestamp best_d = half + 1;
        for (std::size_t j = lo; j < b.size(); ++j) {
            if (b[j] > want + half) break;
            if (used[j]) continue;
            const Timestamp d = std::abs(b[j] - want);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best < b.size()) {
            used[best] = true;
            ++raw;
        }
    }
    out.raw_count = raw;
    out.raw = static_cast<double>(raw) / acquisition_time;

    // Accidental floor from the survey wings (outer 20% of bins on each side),
    // excluding any overlap with the matching window.
    double wing_counts = 0.0;
    std::size_t wing_bins = 0;
    const std::size_t n_bins = survey.counts.size();
    const std::size_t n_wing = std::max<std::size_t>(1, n_bins / 5);
    for (std::size_t i = 0; i < n_wing; ++i) {
        wing_counts += static_cast<double>(survey.counts[i]);
        wing_counts += static_cast<double>(survey.counts[n_bins - 1 - i]);
        wing_bins += 2;
    }
    const double counts_per_ps =
        wing_counts / (static_cast<double>(wing_bins) * static_cast<double>(survey_res));
    out.accidental = counts_per_ps * static_cast<double>(window_ps) / acquisition_time;
    out.net = std::max(0.0, out.raw - out.accidental);
    return out;
}

/// Invert the non-paralyzable dead-time loss map.
inline double dead_time_correct(double measured_rate_cps, double dead_time_s) {
    if (measured_rate_cps < 0.0 || dead_time_s < 0.0)
        throw validation_error("dead_time_correct: negative input");
    const double x = measured_rate_cps * dead_time_s;
    if (x >= 1.0)
        throw numerical_error("dead_time_correct: measured rate saturates the dead time");
    return measured_rate_cps / (1.0 - x);
}

/// N_pair = N_S N_I / N_C.
inline double pair_rate_estimate(double n_s_cps, double n_i_cps, double n_c_cps) {
    if (!(n_c_cps > 0.0))
        throw validation_error("pair_rate_estimate: coincidence rate must be positive");
    return n_s_cps * n_i_cps / n_c_cps;
}

/// eta = N_C / N_single; values above 1 flag inconsistent inputs.
inline double heralding_efficiency(double n_c_cps, double n_single_cps) {
    if (!(n_single_cps > 0.0))
        throw validation_error("heralding_efficiency: singles rate must be positive");
    return n_c_cps / n_single_cps;
}

struct CauchySchwarz {
    double R = 0.0;
    double sigma_R = 0.0;
};

/// R = g_si^2 / (g_ss g_ii) with first-order error propagation.
inline CauchySchwarz cauchy_schwarz_R(double g_si, double g_ss, double g_ii,
                                      double sigma_si = 0.0, double sigma_ss = 0.0,
                                      double sigma_ii = 0.0) {
    if (!(g_si > 0.0) || !(g_ss > 0.0) || !(g_ii > 0.0))
        throw validation_error("cauchy_schwarz_R: g2 values must be positive");
    CauchySchwarz out;
    out.R = g_si * g_si / (g_ss * g_ii);
    const double rel2 = 4.0 * (sigma_si / g_si) * (sigma_si / g_si) +
                        (sigma_ss / g_ss) * (sigma_ss / g_ss) +
                        (sigma_ii / g_ii) * (sigma_ii / g_ii);
    out.sigma_R = out.R * std::sqrt(rel2);
    return out;
}

/// Eq. (4): g_C(tau) = G_threefold(tau) * R0 / (N_si1 * G_si2(tau)).
/// R0 is the herald-channel singles count, n_si1_0 the herald coincidence
/// count over the same acquisition. Bins with an empty denominator are masked.
inline CorrelationCurve heralded_g2(const Histogram& threefold, double r0, double n_si1_0,
                                    const Histogram& g_si2) {
    threefold.validate();
    g_si2.validate();
    if (threefold.counts.size() != g_si2.counts.size() ||
        threefold.bin_width != g_si2.bin_width || threefold.origin != g_si2.origin)
        throw validation_error("heralded_g2: histograms must share binning");
    if (!(r0 > 0.0) || !(n_si1_0 > 0.0))
        throw validation_error("heralded_g2: herald factors must be positive");

    CorrelationCurve c;
    const std::size_t n = threefold.counts.size();
    c.tau.resize(n);
    c.g2.resize(n);
    c.sigma_g2.resize(n);
    c.masked.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        c.tau[i] = threefold.bin_center(i);
        const auto num = static_cast<double>(threefold.counts[i]);
        const auto den = static_cast<double>(g_si2.counts[i]);
        if (den <= 0.0) {
            c.masked[i] = true;
            c.g2[i] = 0.0;
            c.sigma_g2[i] = 0.0;
            continue;
        }
        c.g2[i] = num * r0 / (n_si1_0 * den);
        const double rel2 = (num > 0.0 ? 1.0 / num : 0.0) + 1.0 / den;
        c.sigma_g2[i] = c.g2[i] * std::sqrt(rel2);
    }
    detail::finalize_curve(c);
    return c;
}

/// g_C evaluated at the herald-coincidence peak delay (the delay where the
/// two-fold D1-D3 histogram peaks), with its propagated sigma.
struct HeraldedPoint {
    double g2 = 0.0;
    double sigma = 0.0;
    double tau_ps = 0.0;
};

inline HeraldedPoint heralded_g2_at_peak(const CorrelationCurve& g_c, const Histogram& g_si2) {
    std::size_t pk = 0;
    for (std::size_t i = 1; i < g_si2.counts.size(); ++i)
        if (g_si2.counts[i] > g_si2.counts[pk]) pk = i;
    HeraldedPoint p;
    p.tau_ps = g_si2.bin_center(pk);
    if (pk < g_c.g2.size() && !(pk < g_c.masked.size() && g_c.masked[pk])) {
        p.g2 = g_c.g2[pk];
        p.sigma = g_c.sigma_g2[pk];
    }
    return p;
}

/// Peak of the normalized conditional auto-correlation (g_SII).
inline double conditional_peak(const CorrelationCurve& g_sii) {
    if (g_sii.g2.empty()) throw validation_error("conditional_peak: empty curve");
    return g_sii.g2[g_sii.peak_index()];
}

} // namespace ppb

#endif
