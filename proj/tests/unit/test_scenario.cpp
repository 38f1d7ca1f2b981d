#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>

#include "ppb/reproduce.hpp"
#include "ppb/scenario.hpp"

using namespace ppb;
namespace fs = std::filesystem;

#ifndef PPB_SCENARIO_DIR
#define PPB_SCENARIO_DIR "scenarios"
#endif

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag)
        : path(fs::temp_directory_path() /
               (std::string("ppb_scn_") + tag + "_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// Small, fast scenario used for behavioral tests.
Scenario small_cross() {
    Scenario sc;
    sc.name = "small";
    sc.topology = "cross";
    sc.duration = 0.5;
    sc.seed = 9;
    sc.pair_rate = 4e5;
    sc.background_rate_signal = 5e4;
    sc.background_rate_idler = 5e4;
    sc.waveform.points = 1501;
    sc.waveform.velocity_points = 128;
    sc.det_signal.dead_time = 0.0;
    sc.det_idler.dead_time = 0.0;
    sc.analysis.resolution_ps = 100;
    sc.analysis.rebin_ps = 300;
    return sc;
}

} // namespace

TEST_CASE("bundled scenario files parse and validate") {
    for (const char* name :
         {"fig4a.scenario", "fig4b.scenario", "fig5.scenario", "uncorrelated.scenario"}) {
        const auto sc = Scenario::from_file(fs::path(PPB_SCENARIO_DIR) / name);
        REQUIRE_NOTHROW(sc.validate());
        REQUIRE_FALSE(sc.name.empty());
    }
}

TEST_CASE("scenario validation rejects bad configurations") {
    auto sc = small_cross();
    sc.duration = 0.0;
    REQUIRE_THROWS_AS(sc.validate(), validation_error);

    auto sc2 = small_cross();
    sc2.topology = "ring";
    REQUIRE_THROWS_AS(sc2.validate(), validation_error);

    auto sc3 = small_cross();
    sc3.analysis.rebin_ps = 250; // not a multiple of resolution 100
    REQUIRE_THROWS_AS(sc3.validate(), validation_error);

    auto sc4 = small_cross();
    sc4.analysis.window_s = 0.0;
    REQUIRE_THROWS_AS(sc4.validate(), validation_error);

    const auto cfg = ConfigText::parse("name = x\ntopology = cross\nduration = 0\n");
    REQUIRE_THROWS_AS(Scenario::from_config(cfg), validation_error);
}

TEST_CASE("scenario hash tracks content") {
    const auto a = small_cross();
    auto b = small_cross();
    REQUIRE(a.hash() == b.hash());
    b.pair_rate += 1.0;
    REQUIRE(a.hash() != b.hash());
}

TEST_CASE("cross scenario produces a peaked curve and a rate report") {
    const auto result = run_scenario(small_cross());
    REQUIRE(result.curves.count("gsi") == 1);
    REQUIRE(result.scalars.at("g_si_0") > 5.0); // strong pair correlation
    REQUIRE(result.scalars.at("n_c_cps") > 0.0);
    REQUIRE(result.scalars.at("waveform_fwhm_ns") > 1.0);
    const auto& curve = result.curves.at("gsi");
    // wings fall back to the uncorrelated floor
    REQUIRE(curve.g2.back() < result.scalars.at("g_si_0") / 3.0);
}

TEST_CASE("run results are deterministic, including output checksums") {
    TempDir dir_a("a"), dir_b("b");
    const auto sc = small_cross();
    const auto ra = run_scenario(sc);
    const auto rb = run_scenario(sc);
    REQUIRE(ra.scalars.at("g_si_0") == rb.scalars.at("g_si_0"));

    const auto ma = write_scenario_outputs(sc, ra, dir_a.path, 1.0);
    const auto mb = write_scenario_outputs(sc, rb, dir_b.path, 2.0);
    REQUIRE(ma.output_checksums == mb.output_checksums);
    REQUIRE(ma.scenario_hash == mb.scenario_hash);
    for (const auto& [file, sum] : ma.output_checksums) {
        REQUIRE(fs::exists(dir_a.path / file));
        REQUIRE(hex64(fnv1a64(read_file(dir_a.path / file))) == sum);
    }
    REQUIRE(fs::exists(dir_a.path / "small_manifest.txt"));
}

TEST_CASE("seed override changes the realization but not the physics") {
    const auto sc = small_cross();
    const auto r1 = run_scenario(sc, 1001);
    const auto r2 = run_scenario(sc, 1002);
    REQUIRE(r1.scalars.at("g_si_0") != r2.scalars.at("g_si_0"));
    // both realizations still show the pair peak
    REQUIRE(r1.scalars.at("g_si_0") > 5.0);
    REQUIRE(r2.scalars.at("g_si_0") > 5.0);
}

TEST_CASE("worker count does not change scenario outputs") {
    const auto sc = small_cross();
    setenv("PPB_THREADS", "1", 1);
    const auto r1 = run_scenario(sc);
    setenv("PPB_THREADS", "4", 1);
    const auto r4 = run_scenario(sc);
    unsetenv("PPB_THREADS");
    REQUIRE(curve_to_csv(r1.curves.at("gsi")) == curve_to_csv(r4.curves.at("gsi")));
}

TEST_CASE("pump rate table is linear through the anchor") {
    const PumpRateMap map;
    REQUIRE(map.n_c(40.0) == Catch::Approx(61700.0));
    REQUIRE(map.n_c(20.0) == Catch::Approx(61700.0 / 2.0));
    REQUIRE(map.n_s(10.0) * 4.0 == Catch::Approx(map.n_s(40.0)));
    const auto table = pump_rate_table(map);
    REQUIRE(table.find("power_mw") != std::string::npos);
}

TEST_CASE("reproduce rejects unknown figure ids") {
    TempDir dir("fig");
    REQUIRE_THROWS_AS(reproduce_figure("fig9", PPB_SCENARIO_DIR, dir.path), validation_error);
    REQUIRE_NOTHROW(reproduce_figure("fig3", PPB_SCENARIO_DIR, dir.path));
    REQUIRE(fs::exists(dir.path / "fig3_rates.csv"));
}

TEST_CASE("exponential waveform model") {
    auto sc = small_cross();
    sc.waveform.model = "exponential";
    sc.waveform.exp_rate = 1e8;
    sc.waveform.tau_min = 0.0;
    sc.waveform.tau_max = 100e-9;
    sc.waveform.points = 2001;
    const auto wf = detail::build_waveform(sc);
    REQUIRE_NOTHROW(wf.validate());
    // half-max at ln2 / rate
    REQUIRE(fwhm(wf) == Catch::Approx(std::log(2.0) / 1e8).epsilon(0.02));
}
