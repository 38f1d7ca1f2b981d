// Command-line front end: scenario runner, event-file analysis, waveform
// tables, figure drivers and format conversion.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ppb/analyze.hpp"
#include "ppb/errors.hpp"
#include "ppb/io.hpp"
#include "ppb/reproduce.hpp"
#include "ppb/scenario.hpp"
#include "ppb/theory.hpp"
#include "ppb/version.hpp"

#ifndef PPB_SCENARIO_DIR
#define PPB_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;

namespace {

fs::path scenario_dir() {
    if (const char* env = std::getenv("PPB_SCENARIO_DIR")) return env;
    return PPB_SCENARIO_DIR;
}

struct CommonOpts {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool full = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--out-dir", opts.out_dir, "Directory for output files");
    cmd->add_option("--seed", opts.seed, "Override the scenario seed");
    cmd->add_flag("--full", opts.full, "Full-scale acquisition instead of desk scale");
}

int cmd_simulate(const std::string& scenario_path, const CommonOpts& opts, bool save_events) {
    const ppb::Scenario sc = ppb::Scenario::from_file(scenario_path);
    const auto t0 = std::chrono::steady_clock::now();
    const ppb::ScenarioResult result = ppb::run_scenario(sc, opts.seed, opts.full);
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto manifest = ppb::write_scenario_outputs(sc, result, opts.out_dir, runtime);

    if (save_events) {
        // Re-derive the detected cross-correlation streams with the same seed
        // chain the run used, so the event file matches the persisted curves.
        if (sc.topology != "cross" && sc.topology != "survey")
            throw ppb::validation_error(
                "--save-events requires a scenario with a cross-correlation leg");
        const ppb::TwoPhotonWaveform wf = ppb::detail::build_waveform(sc);
        ppb::Rng seeder(result.seed);
        const auto det = ppb::detail::simulate_detected(sc, wf, result.duration,
                                                        seeder.fork(1).next_u64());
        const auto events = ppb::interleave({{0, &det.signal}, {1, &det.idler}});
        ppb::write_event_file(fs::path(opts.out_dir) / (sc.name + "_events.ppes"), events);
    }

    std::cout << "scenario " << sc.name << " seed " << result.seed << " duration "
              << result.duration << " s\n";
    for (const auto& [k, v] : result.scalars) std::cout << "  " << k << " = " << v << '\n';
    std::cout << "outputs in " << opts.out_dir << " (hash " << manifest.scenario_hash << ")\n";
    return 0;
}

int cmd_analyze(const std::string& events_path, double duration, ppb::Timestamp resolution_ps,
                ppb::Timestamp rebin_ps, double window_ns, double range_ns, bool multi_stop,
                const CommonOpts& opts) {
    const auto events = ppb::read_event_file(events_path);
    auto channels = ppb::split_channels(events);
    if (channels.count(0) == 0 || channels.count(1) == 0)
        throw ppb::validation_error("analyze: event file must carry channels 0 and 1");
    const ppb::EventStream& a = channels[0];
    const ppb::EventStream& b = channels[1];
    if (duration <= 0.0) {
        ppb::Timestamp last = 0;
        for (const auto& e : events)
            last = std::max(last, static_cast<ppb::Timestamp>(e.timestamp_ps));
        duration = ppb::to_seconds(last);
    }
    if (!(duration > 0.0)) throw ppb::validation_error("analyze: empty acquisition");

    const ppb::DelayRange range{0, ppb::to_ps(range_ns * 1e-9)};
    ppb::Histogram h = multi_stop
                           ? ppb::multi_stop_histogram(a, b, resolution_ps, range, duration)
                           : ppb::start_stop_histogram(a, b, resolution_ps, range, duration);
    if (rebin_ps > resolution_ps) h = ppb::rebin(h, rebin_ps);
    const ppb::CorrelationCurve curve = ppb::normalize_cross_correlation(h);
    const auto coinc = ppb::coincidence_count(a, b, window_ns * 1e-9, duration);

    fs::create_directories(opts.out_dir);
    const fs::path stem = fs::path(events_path).stem();
    ppb::write_file_atomic(fs::path(opts.out_dir) / (stem.string() + "_g2.csv"),
                           ppb::curve_to_csv(curve));

    std::cout << "events: " << a.size() << " / " << b.size() << " over " << duration << " s\n";
    std::cout << "g2 peak " << curve.peak_value << " at " << curve.peak_tau * 1e-3
              << " ns, fwhm " << curve.fwhm_ps * 1e-3 << " ns\n";
    std::cout << "coincidences raw " << coinc.raw << " cps, accidental " << coinc.accidental
              << " cps, net " << coinc.net << " cps\n";
    return 0;
}

int cmd_theory(double tau_min_ns, double tau_max_ns, std::size_t points,
               std::size_t velocity_points, double temperature_c, double lambda_i_nm,
               const CommonOpts& opts) {
    ppb::AtomicParams params;
    params.temperature = temperature_c + 273.15;
    params.lambda_i = lambda_i_nm * 1e-9;
    const auto grid = ppb::uniform_tau_grid(tau_min_ns * 1e-9, tau_max_ns * 1e-9, points);
    const auto wf = ppb::doppler_averaged_g2(grid, params, velocity_points);

    fs::create_directories(opts.out_dir);
    ppb::write_file_atomic(fs::path(opts.out_dir) / "waveform.csv", ppb::waveform_to_csv(wf));
    std::cout << "density fwhm " << ppb::fwhm(wf) * 1e9 << " ns\n";
    std::cout << "doppler width " << ppb::doppler_fwhm_hz(params) * 1e-6 << " MHz\n";
    return 0;
}

int cmd_convert(const std::string& in_path, const std::string& out_path) {
    const auto ext = [](const std::string& p) {
        return fs::path(p).extension().string();
    };
    const std::string from = ext(in_path), to = ext(out_path);
    if (from == ".ppes" && to == ".csv") {
        const auto events = ppb::read_event_file(in_path);
        ppb::write_file_atomic(out_path, ppb::events_to_csv(events));
    } else if (from == ".csv" && to == ".ppes") {
        const auto events = ppb::events_from_csv(ppb::read_file(in_path), in_path);
        ppb::write_event_file(out_path, events);
    } else {
        throw ppb::validation_error("convert: expected .ppes <-> .csv, got '" + from +
                                    "' -> '" + to + "'");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photon-pair correlation toolkit"};
    app.set_version_flag("--version", std::string(ppb::VERSION));
    app.require_subcommand(1);

    CommonOpts sim_opts;
    std::string sim_scenario;
    bool sim_save_events = false;
    auto* sim = app.add_subcommand("simulate", "Run a scenario file end to end");
    sim->add_option("scenario", sim_scenario, "Scenario file")->required();
    add_common(sim, sim_opts);
    sim->add_flag("--save-events", sim_save_events, "Also write the detected event streams");

    CommonOpts ana_opts;
    std::string ana_events;
    double ana_duration = 0.0, ana_window_ns = 4.1, ana_range_ns = 50.0;
    ppb::Timestamp ana_res = 4, ana_rebin = 300;
    bool ana_multi = false;
    auto* ana = app.add_subcommand("analyze", "Cross-correlate channels 0 and 1 of an event file");
    ana->add_option("events", ana_events, "Event file (.ppes)")->required();
    ana->add_option("--duration", ana_duration, "Acquisition time in s (default: last event)");
    ana->add_option("--resolution-ps", ana_res, "Histogram resolution in ps");
    ana->add_option("--rebin-ps", ana_rebin, "Rebinned width in ps");
    ana->add_option("--window-ns", ana_window_ns, "Coincidence window in ns");
    ana->add_option("--range-ns", ana_range_ns, "Histogram span in ns");
    ana->add_flag("--multi-stop", ana_multi, "Full correlator instead of start-stop");
    add_common(ana, ana_opts);

    CommonOpts thr_opts;
    double thr_tau_min = -2.0, thr_tau_max = 22.0, thr_temp = 52.0, thr_lambda = 780.2;
    std::size_t thr_points = 3001, thr_vel = 512;
    auto* thr = app.add_subcommand("theory", "Velocity-averaged two-photon waveform table");
    thr->add_option("--tau-min-ns", thr_tau_min, "Grid start in ns");
    thr->add_option("--tau-max-ns", thr_tau_max, "Grid end in ns");
    thr->add_option("--points", thr_points, "Grid points");
    thr->add_option("--velocity-points", thr_vel, "Velocity quadrature points");
    thr->add_option("--temperature-c", thr_temp, "Cell temperature in Celsius");
    thr->add_option("--lambda-i-nm", thr_lambda, "Idler wavelength in nm");
    add_common(thr, thr_opts);

    CommonOpts rep_opts;
    std::string rep_id, rep_scenario_dir;
    auto* rep = app.add_subcommand("reproduce", "Figure-reproduction drivers");
    rep->add_option("figure", rep_id, "One of fig3 fig4a fig4b fig5b fig5c fig5c-inset")
        ->required();
    rep->add_option("--scenario-dir", rep_scenario_dir, "Directory with bundled scenarios");
    add_common(rep, rep_opts);

    std::string conv_in, conv_out;
    auto* conv = app.add_subcommand("convert", "Convert events between .ppes and .csv");
    conv->add_option("input", conv_in, "Input file")->required();
    conv->add_option("output", conv_out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage problems map onto the validation code
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_scenario, sim_opts, sim_save_events);
        if (ana->parsed())
            return cmd_analyze(ana_events, ana_duration, ana_res, ana_rebin, ana_window_ns,
                               ana_range_ns, ana_multi, ana_opts);
        if (thr->parsed())
            return cmd_theory(thr_tau_min, thr_tau_max, thr_points, thr_vel, thr_temp,
                              thr_lambda, thr_opts);
        if (rep->parsed()) {
            const fs::path dir = rep_scenario_dir.empty() ? scenario_dir()
                                                          : fs::path(rep_scenario_dir);
            ppb::reproduce_figure(rep_id, dir, rep_opts.out_dir, rep_opts.seed, rep_opts.full);
            std::cout << "wrote " << rep_id << " outputs to " << rep_opts.out_dir << '\n';
            return 0;
        }
        if (conv->parsed()) return cmd_convert(conv_in, conv_out);
    } catch (const ppb::validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ppb::io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ppb::numerical_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
