#ifndef PPB_THEORY_HPP
#define PPB_THEORY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ppb/errors.hpp"

namespace ppb {

namespace constants {
inline constexpr double k_boltzmann = 1.380649e-23;     // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double rb87_mass = 86.909180 * atomic_mass_unit;
} // namespace constants

/// Parameters of the Rb-87 ladder system and the vapor cell operating point.
struct AtomicParams {
    double gamma_e = 2.0 * std::numbers::pi * 6.065e6;  // intermediate-state decay, rad/s
    double gamma_d = 2.0 * std::numbers::pi * 0.6673e6; // upper-state decay, rad/s
    double delta_p = 810e6;  // pump detuning, Hz
    double delta_c = 0.0;    // coupling detuning, Hz
    double lambda_p = 780.2e-9;
    double lambda_c = 776.8e-9;
    double lambda_s = 775.8e-9;
    double lambda_i = 780.2e-9;
    double temperature = 325.15; // K (52 C cell)
    double atomic_mass = constants::rb87_mass;

    // Fraction of the idler wavevector that acts as the effective Doppler
    // dephasing rate of the velocity-averaged amplitude. The default pins the
    // density FWHM to the inverse of the Doppler FWHM, which is the observable
    // the model is meant to reproduce; 1.0 gives the bare e^{-i k_i v tau}.
    double doppler_phase_scale = std::numbers::sqrt2 * std::numbers::ln2 / std::numbers::pi;

    void validate() const {
        if (!(gamma_e > 0.0) || !(gamma_d > 0.0))
            throw validation_error("atomic params: decay rates must be positive");
        if (!(lambda_p > 0.0) || !(lambda_c > 0.0) || !(lambda_s > 0.0) || !(lambda_i > 0.0))
            throw validation_error("atomic params: wavelengths must be positive");
        if (!(temperature > 0.0))
            throw validation_error("atomic params: temperature must be positive");
        if (!(atomic_mass > 0.0))
            throw validation_error("atomic params: atomic mass must be positive");
        if (!(doppler_phase_scale > 0.0))
            throw validation_error("atomic params: doppler phase scale must be positive");
    }
};

/// 1D thermal velocity spread sigma_v = sqrt(kB T / m), m/s.
inline double velocity_sigma(const AtomicParams& p) {
    p.validate();
    return std::sqrt(constants::k_boltzmann * p.temperature / p.atomic_mass);
}

/// One-dimensional Maxwell-Boltzmann probability density, s/m.
inline double maxwell_boltzmann_pdf(double v, const AtomicParams& p) {
    const double sv = velocity_sigma(p);
    const double x = v / sv;
    return std::exp(-0.5 * x * x) / (sv * std::sqrt(2.0 * std::numbers::pi));
}

/// Doppler FWHM of the idler transition in Hz; ~540 MHz at the 52 C operating
/// point, the quantity quoted against the biphoton correlation time.
inline double doppler_fwhm_hz(const AtomicParams& p) {
    const double k_i = 2.0 * std::numbers::pi / p.lambda_i;
    return k_i * velocity_sigma(p) * 2.0 * std::sqrt(2.0 * std::numbers::ln2) /
           (2.0 * std::numbers::pi);
}

/// Two-photon amplitude of one velocity class: a causal exponential decay at
/// the intermediate-state rate carrying a velocity-dependent Doppler phase.
inline std::complex<double> two_photon_amplitude(double tau, double v, const AtomicParams& p) {
    p.validate();
    if (!std::isfinite(tau) || !std::isfinite(v))
        throw validation_error("two_photon_amplitude: tau and v must be finite");
    if (tau < 0.0) return {0.0, 0.0};
    const double kappa = p.doppler_phase_scale * 2.0 * std::numbers::pi / p.lambda_i;
    const double mod = std::exp(-0.5 * p.gamma_e * tau);
    const double phase = -kappa * v * tau;
    return std::polar(mod, phase);
}

/// Doppler-averaged relative-delay amplitude and density on a uniform grid.
struct TwoPhotonWaveform {
    std::vector<double> tau_grid;                 // s, uniform
    std::vector<std::complex<double>> amplitude;  // dimensionless
    std::vector<double> density;                  // 1/s, trapezoid-normalized to 1

    double grid_step() const {
        return tau_grid.size() > 1 ? tau_grid[1] - tau_grid[0] : 0.0;
    }

    /// Cumulative distribution of the density at tau, by trapezoid segments
    /// with linear density interpolation inside a segment. Exactly the law the
    /// simulator samples from.
    double cdf(double tau) const {
        if (cdf_.empty()) build_cdf();
        if (tau <= tau_grid.front()) return 0.0;
        if (tau >= tau_grid.back()) return 1.0;
        const double dt = grid_step();
        const auto idx = static_cast<std::size_t>((tau - tau_grid.front()) / dt);
        const std::size_t i = std::min(idx, tau_grid.size() - 2);
        const double x = tau - tau_grid[i];
        const double d0 = density[i];
        const double slope = (density[i + 1] - density[i]) / dt;
        return cdf_[i] + d0 * x + 0.5 * slope * x * x;
    }

    /// Inverse-CDF sample; u in [0,1).
    double sample_delay(double u) const {
        if (cdf_.empty()) build_cdf();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t i = it == cdf_.begin() ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
        i = std::min(i, tau_grid.size() - 2);
        const double dt = grid_step();
        const double rem = u - cdf_[i];
        const double d0 = density[i];
        const double slope = (density[i + 1] - density[i]) / dt;
        double x;
        if (std::abs(slope) * dt < 1e-12 * std::max(d0, 1e-300)) {
            x = d0 > 0.0 ? rem / d0 : 0.0;
        } else {
            // Solve d0*x + slope*x^2/2 = rem for the root in [0, dt].
            const double disc = d0 * d0 + 2.0 * slope * rem;
            x = disc > 0.0 ? (-d0 + std::sqrt(disc)) / slope : 0.0;
        }
        x = std::clamp(x, 0.0, dt);
        return tau_grid[i] + x;
    }

    void validate() const {
        if (tau_grid.size() < 2)
            throw validation_error("waveform: grid must have at least two points");
        if (tau_grid.size() != density.size())
            throw validation_error("waveform: grid/density size mismatch");
        double integral = 0.0;
        const double dt = grid_step();
        for (std::size_t i = 0; i + 1 < density.size(); ++i) {
            if (density[i] < 0.0) throw validation_error("waveform: negative density");
            integral += 0.5 * (density[i] + density[i + 1]) * dt;
        }
        if (std::abs(integral - 1.0) > 1e-6)
            throw validation_error("waveform: density is not normalized");
    }

private:
    void build_cdf() const {
        cdf_.resize(tau_grid.size());
        cdf_[0] = 0.0;
        const double dt = grid_step();
        for (std::size_t i = 1; i < tau_grid.size(); ++i)
            cdf_[i] = cdf_[i - 1] + 0.5 * (density[i - 1] + density[i]) * dt;
        // Guard against rounding: force an exact unit total.
        const double total = cdf_.back();
        if (total > 0.0)
            for (auto& c : cdf_) c /= total;
        cdf_.back() = 1.0;
    }

    mutable std::vector<double> cdf_;
};

inline std::vector<double> uniform_tau_grid(double tau_min, double tau_max, std::size_t n) {
    if (n < 2 || !(tau_max > tau_min))
        throw validation_error("tau grid: need tau_max > tau_min and n >= 2");
    std::vector<double> g(n);
    const double dt = (tau_max - tau_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = tau_min + dt * static_cast<double>(i);
    return g;
}

/// Velocity-average of the two-photon amplitude over a Maxwell-Boltzmann
/// distribution, trapezoid over +-6 sigma_v; density normalized to unit area.
inline TwoPhotonWaveform doppler_averaged_g2(const std::vector<double>& tau_grid,
                                             const AtomicParams& params,
                                             std::size_t n_velocity_points = 512) {
    params.validate();
    if (tau_grid.size() < 2)
        throw validation_error("doppler_averaged_g2: grid must have at least two points");
    const double dt = tau_grid[1] - tau_grid[0];
    if (!(dt > 0.0))
        throw validation_error("doppler_averaged_g2: grid must be increasing");
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
        if (std::abs((tau_grid[i] - tau_grid[i - 1]) - dt) > 1e-9 * dt)
            throw validation_error("doppler_averaged_g2: grid must be uniform");
    if (n_velocity_points < 64)
        throw validation_error("doppler_averaged_g2: need at least 64 velocity points");

    const double sv = velocity_sigma(params);
    const double kappa = params.doppler_phase_scale * 2.0 * std::numbers::pi / params.lambda_i;
    const double v_span = 6.0 * sv;
    const double dv = 2.0 * v_span / static_cast<double>(n_velocity_points - 1);
    const double norm = 1.0 / (sv * std::sqrt(2.0 * std::numbers::pi));

    // Precompute the velocity weights (trapezoid ends at half weight).
    std::vector<double> v(n_velocity_points), w(n_velocity_points);
    for (std::size_t j = 0; j < n_velocity_points; ++j) {
        v[j] = -v_span + dv * static_cast<double>(j);
        const double x = v[j] / sv;
        w[j] = norm * std::exp(-0.5 * x * x) * dv;
    }
    w.front() *= 0.5;
    w.back() *= 0.5;

    TwoPhotonWaveform out;
    out.tau_grid = tau_grid;
    out.amplitude.resize(tau_grid.size());
    out.density.resize(tau_grid.size());
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        const double tau = tau_grid[i];
        if (tau < 0.0) {
            out.amplitude[i] = {0.0, 0.0};
            continue;
        }
        // sum_j f(v_j) e^{-i kappa v_j tau} dv, with the decay factored out.
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < n_velocity_points; ++j) {
            const double ph = -kappa * v[j] * tau;
            re += w[j] * std::cos(ph);
            im += w[j] * std::sin(ph);
        }
        const double decay = std::exp(-0.5 * params.gamma_e * tau);
        out.amplitude[i] = {decay * re, decay * im};
    }

    double integral = 0.0;
    for (std::size_t i = 0; i < tau_grid.size(); ++i)
        out.density[i] = std::norm(out.amplitude[i]);
    for (std::size_t i = 0; i + 1 < tau_grid.size(); ++i)
        integral += 0.5 * (out.density[i] + out.density[i + 1]) * dt;
    if (!(integral > 0.0))
        throw numerical_error("doppler_averaged_g2: density integrated to zero");
    const double s = 1.0 / integral;
    const double amp_s = std::sqrt(s);
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        out.density[i] *= s;
        out.amplitude[i] *= amp_s;
    }
    return out;
}

/// Full width at half maximum of a sampled curve. Baseline is the median of
/// the outer 10% of bins; crossings are linearly interpolated. For one-sided
/// curves whose peak sits on the grid edge the width is measured from the peak.
inline double fwhm(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 4)
        throw validation_error("fwhm: need matching x/y with at least 4 points");
    const std::size_t n = x.size();
    std::size_t n_outer = std::max<std::size_t>(1, n / 20); // 5% each end
    std::vector<double> outer;
    outer.reserve(2 * n_outer);
    for (std::size_t i = 0; i < n_outer; ++i) outer.push_back(y[i]);
    for (std::size_t i = n - n_outer; i < n; ++i) outer.push_back(y[i]);
    // Lower median: when one edge holds the peak of a one-sided curve the
    // baseline must come from the decayed tail, not the peak shoulder.
    const std::size_t mid = (outer.size() - 1) / 2;
    std::nth_element(outer.begin(), outer.begin() + static_cast<std::ptrdiff_t>(mid),
                     outer.end());
    const double baseline = outer[mid];

    const auto peak_it = std::max_element(y.begin(), y.end());
    const std::size_t pk = static_cast<std::size_t>(peak_it - y.begin());
    const double peak = *peak_it;
    if (!(peak > baseline))
        throw numerical_error("fwhm: curve has no peak above baseline");
    const double half = baseline + 0.5 * (peak - baseline);

    double left = x[0];
    for (std::size_t i = pk; i > 0; --i) {
        if (y[i - 1] < half) {
            const double f = (half - y[i - 1]) / (y[i] - y[i - 1]);
            left = x[i - 1] + f * (x[i] - x[i - 1]);
            break;
        }
    }

    double right = x[n - 1];
    bool crossed_right = false;
    for (std::size_t i = pk; i + 1 < n; ++i) {
        if (y[i + 1] < half) {
            const double f = (y[i] - half) / (y[i] - y[i + 1]);
            right = x[i] + f * (x[i + 1] - x[i]);
            crossed_right = true;
            break;
        }
    }
    if (!crossed_right) right = x[n - 1];
    return right - left;
}

inline double fwhm(const TwoPhotonWaveform& wf) { return fwhm(wf.tau_grid, wf.density); }

} // namespace ppb

#endif
