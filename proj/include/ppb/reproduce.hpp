#ifndef PPB_REPRODUCE_HPP
#define PPB_REPRODUCE_HPP

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppb/errors.hpp"
#include "ppb/scenario.hpp"

namespace ppb {

/// Linear pump-power -> counting-rate map. Saturation at high pump power is
/// deliberately outside the model; rates scale with the 40 mW anchor point
/// where the published singles/coincidence budget applies.
struct PumpRateMap {
    double anchor_power_mw = 40.0;
    double n_s_at_anchor = 1.42e6;  // cps
    double n_i_at_anchor = 1.3e6;   // cps
    double n_c_at_anchor = 61700.0; // cps

    double n_s(double power_mw) const { return n_s_at_anchor * power_mw / anchor_power_mw; }
    double n_i(double power_mw) const { return n_i_at_anchor * power_mw / anchor_power_mw; }
    double n_c(double power_mw) const { return n_c_at_anchor * power_mw / anchor_power_mw; }
};

inline std::string pump_rate_table(const PumpRateMap& map = {}) {
    std::ostringstream ss;
    ss.precision(10);
    ss << "# linear pump map, no saturation; anchor " << map.anchor_power_mw << " mW\n";
    ss << "# benchmark at anchor: N_s " << map.n_s_at_anchor << " cps, N_i "
       << map.n_i_at_anchor << " cps, N_c " << map.n_c_at_anchor << " cps\n";
    ss << "power_mw, n_s_cps, n_i_cps, n_c_cps\n";
    for (int p = 5; p <= 50; p += 5)
        ss << p << ", " << map.n_s(p) << ", " << map.n_i(p) << ", " << map.n_c(p) << '\n';
    return ss.str();
}

struct SweepPoint {
    double pair_rate = 0.0; // generated pairs per second
    double gc0 = 0.0;
    double sigma = 0.0;
};

/// Heralded-autocorrelation sweep: scale the source rate (pump-power
/// surrogate) of a conditional scenario and record g_C at the herald peak.
/// Background rates scale with the pump alongside the pair rate.
inline std::vector<SweepPoint> heralded_sweep(const Scenario& base,
                                              const std::vector<double>& scale_factors,
                                              std::optional<std::uint64_t> seed_override =
                                                  std::nullopt,
                                              bool full_scale = false) {
    if (base.topology != "conditional")
        throw validation_error("heralded_sweep: scenario topology must be 'conditional'");
    std::vector<SweepPoint> out;
    out.reserve(scale_factors.size());
    for (std::size_t i = 0; i < scale_factors.size(); ++i) {
        const double f = scale_factors[i];
        if (!(f > 0.0)) throw validation_error("heralded_sweep: scale factors must be positive");
        Scenario sc = base;
        sc.pair_rate *= f;
        sc.background_rate_signal *= f;
        sc.background_rate_idler *= f;
        const std::uint64_t seed = seed_override.value_or(base.seed) + i;
        const ScenarioResult r = run_scenario(sc, seed, full_scale);
        out.push_back({sc.pair_rate, r.scalars.at("gc_0"), r.scalars.at("gc_0_sigma")});
    }
    return out;
}

inline std::string sweep_to_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream ss;
    ss.precision(10);
    ss << "# benchmark floor: 0.037 at the lowest pump power, 0.138 at full power\n";
    ss << "pair_rate_hz, gc0, sigma\n";
    for (const auto& p : points) ss << p.pair_rate << ", " << p.gc0 << ", " << p.sigma << '\n';
    return ss.str();
}

inline const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids = {"fig3",  "fig4a", "fig4b",
                                                 "fig5b", "fig5c", "fig5c-inset"};
    return ids;
}

/// Run the driver for one figure id; scenario files are read from
/// scenario_dir, outputs land in out_dir.
inline void reproduce_figure(const std::string& id, const std::filesystem::path& scenario_dir,
                             const std::filesystem::path& out_dir,
                             std::optional<std::uint64_t> seed_override = std::nullopt,
                             bool full_scale = false) {
    std::filesystem::create_directories(out_dir);
    if (id == "fig3") {
        write_file_atomic(out_dir / "fig3_rates.csv", pump_rate_table());
        return;
    }
    if (id == "fig4a") {
        run_scenario_file(scenario_dir / "fig4a.scenario", out_dir, seed_override, full_scale);
        return;
    }
    if (id == "fig4b") {
        run_scenario_file(scenario_dir / "fig4b.scenario", out_dir, seed_override, full_scale);
        return;
    }
    if (id == "fig5b" || id == "fig5c") {
        run_scenario_file(scenario_dir / "fig5.scenario", out_dir, seed_override, full_scale);
        return;
    }
    if (id == "fig5c-inset") {
        const Scenario base = Scenario::from_file(scenario_dir / "fig5.scenario");
        const auto points =
            heralded_sweep(base, {1.0, 0.55, 0.3, 0.17, 0.09}, seed_override, full_scale);
        write_file_atomic(out_dir / "fig5c_inset.csv", sweep_to_csv(points));
        return;
    }
    std::string known;
    for (const auto& f : figure_ids()) known += (known.empty() ? "" : ", ") + f;
    throw validation_error("reproduce: unknown figure id '" + id + "' (available: " + known + ")");
}

} // namespace ppb

#endif
