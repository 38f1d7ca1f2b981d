#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "ppb/analyze.hpp"
#include "ppb/rng.hpp"

using namespace ppb;

TEST_CASE("normalization arithmetic on a hand-built histogram") {
    Histogram h;
    h.bin_width = 500;
    h.origin = 0;
    h.acquisition_time = 2.0;
    h.n_start = 1000;  // 500 cps
    h.n_stop = 4000;   // 2000 cps
    h.counts = {10, 20, 0, 5};
    const auto c = normalize_cross_correlation(h);
    // denom = 500 * 2000 * 500e-12 * 2 = 1e-3
    REQUIRE(c.g2[0] == Catch::Approx(10 / 1e-3));
    REQUIRE(c.g2[1] == Catch::Approx(20 / 1e-3));
    REQUIRE(c.g2[2] == 0.0);
    REQUIRE(c.sigma_g2[3] == Catch::Approx(std::sqrt(5.0) / 1e-3));
    REQUIRE(c.tau[0] == Catch::Approx(250.0));
    REQUIRE(c.peak_value == c.g2[1]);

    Histogram empty = h;
    empty.n_start = 0;
    REQUIRE_THROWS_AS(normalize_cross_correlation(empty), numerical_error);
}

TEST_CASE("uncorrelated poisson streams normalize to one") {
    Rng rng(71);
    const double T = 2.0, rate = 2e5;
    EventStream a, b;
    double t = 0.0;
    while ((t += rng.exponential(1.0 / rate)) < T) a.push_back(to_ps(t));
    t = 0.0;
    while ((t += rng.exponential(1.0 / rate)) < T) b.push_back(to_ps(t));
    const auto h = multi_stop_histogram(a, b, 2000, {-40000, 40000}, T);
    const auto c = normalize_cross_correlation(h);
    double mean = 0.0;
    for (const double g : c.g2) mean += g;
    mean /= static_cast<double>(c.g2.size());
    REQUIRE(mean == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("cauchy-schwarz parameter: published numbers and propagation") {
    // (84.70, 1.74, 1.74) brackets the published R = 2370 +- 150
    const auto cs = cauchy_schwarz_R(84.70, 1.74, 1.74);
    REQUIRE(cs.R == Catch::Approx(84.70 * 84.70 / (1.74 * 1.74)));
    REQUIRE(cs.R > 2220.0);
    REQUIRE(cs.R < 2520.0);

    // propagated sigma: rel^2 = 4 (ds/s)^2 + (da/a)^2 + (db/b)^2
    const auto with_err = cauchy_schwarz_R(84.70, 1.74, 1.74, 0.01, 0.09, 0.06);
    const double rel = std::sqrt(4.0 * std::pow(0.01 / 84.70, 2) +
                                 std::pow(0.09 / 1.74, 2) + std::pow(0.06 / 1.74, 2));
    REQUIRE(with_err.sigma_R == Catch::Approx(with_err.R * rel));
    REQUIRE_THROWS_AS(cauchy_schwarz_R(0.0, 1.0, 1.0), validation_error);
}

TEST_CASE("dead-time correction identities") {
    REQUIRE(dead_time_correct(500000.0, 50e-9) == Catch::Approx(512820.5128).margin(0.01));
    REQUIRE(dead_time_correct(12345.0, 0.0) == 12345.0);
    REQUIRE_THROWS_AS(dead_time_correct(2.1e7, 50e-9), numerical_error);
    // round trip against the loss map measured = true/(1 + true*dead)
    const double true_rate = 8e5, dead = 50e-9;
    const double measured = true_rate / (1.0 + true_rate * dead);
    REQUIRE(dead_time_correct(measured, dead) == Catch::Approx(true_rate).epsilon(1e-12));
}

TEST_CASE("pair-rate and heralding estimators") {
    REQUIRE(pair_rate_estimate(123.0, 77.0, 123.0 * 77.0) == Catch::Approx(1.0));
    // published rate arithmetic: 1.42e6 * 1.3e6 / 61700
    REQUIRE(pair_rate_estimate(1.42e6, 1.3e6, 61700.0) ==
            Catch::Approx(2.992e7).epsilon(1e-3));
    REQUIRE(heralding_efficiency(61700.0, 1.42e6) == Catch::Approx(0.0434).margin(1e-3));
    REQUIRE_THROWS_AS(pair_rate_estimate(1.0, 1.0, 0.0), validation_error);
}

TEST_CASE("gaussian fit recovers synthetic parameters") {
    CorrelationCurve c;
    Rng rng(73);
    for (int i = 0; i < 200; ++i) {
        const double tau = -30000.0 + i * 300.0;
        const double z = (tau - 1200.0) / 4000.0;
        c.tau.push_back(tau);
        c.g2.push_back(1.0 + 0.8 * std::exp(-0.5 * z * z) +
                       0.01 * rng.normal(0.0, 1.0));
        c.sigma_g2.push_back(0.01);
    }
    const auto fit = gaussian_fit(c);
    REQUIRE(fit.baseline == Catch::Approx(1.0).margin(0.01));
    REQUIRE(fit.amplitude == Catch::Approx(0.8).margin(0.03));
    REQUIRE(fit.center == Catch::Approx(1200.0).margin(300.0));
    REQUIRE(fit.sigma == Catch::Approx(4000.0).margin(300.0));
    REQUIRE(fit.value_at_zero() == Catch::Approx(1.0 + 0.8 * std::exp(-0.5 * 0.09)).margin(0.05));
}

TEST_CASE("coincidence counting on constructed streams") {
    // 1000 true pairs at exactly 2 ns delay, 10 us apart; no background.
    EventStream a, b;
    for (Timestamp i = 0; i < 1000; ++i) {
        a.push_back(1000000 + i * 10000000);
        b.push_back(1000000 + i * 10000000 + 2000);
    }
    const auto r = coincidence_count(a, b, 4.1e-9, 10.0);
    REQUIRE(r.raw_count == 1000);
    REQUIRE(r.raw == Catch::Approx(100.0));
    REQUIRE(r.accidental == Catch::Approx(0.0).margin(1e-6));
    REQUIRE(std::abs(r.peak_delay_ps - 2000.0) < 600.0);

    // each start matches at most one stop even when stops cluster
    EventStream b2;
    for (Timestamp i = 0; i < 1000; ++i) {
        b2.push_back(1000000 + i * 10000000 + 1500);
        b2.push_back(1000000 + i * 10000000 + 2500);
    }
    const auto r2 = coincidence_count(a, b2, 4.1e-9, 10.0);
    REQUIRE(r2.raw_count == 1000);
}

TEST_CASE("heralded g2 arithmetic and masking") {
    Histogram three;
    three.bin_width = 300;
    three.origin = -600;
    three.acquisition_time = 1.0;
    three.n_start = 50;
    three.n_stop = 1000;
    three.counts = {2, 8, 4, 0};
    Histogram si2 = three;
    si2.counts = {100, 200, 0, 50};
    const double r0 = 5000.0, n_si1 = 50.0;
    const auto c = heralded_g2(three, r0, n_si1, si2);
    REQUIRE(c.g2[0] == Catch::Approx(2.0 * r0 / (n_si1 * 100.0)));
    REQUIRE(c.g2[1] == Catch::Approx(8.0 * r0 / (n_si1 * 200.0)));
    REQUIRE(c.masked[2]);
    REQUIRE_FALSE(c.masked[3]);
    REQUIRE(c.g2[3] == 0.0);

    Histogram wrong = si2;
    wrong.bin_width = 600;
    wrong.counts = {1, 2};
    REQUIRE_THROWS_AS(heralded_g2(three, r0, n_si1, wrong), validation_error);
    REQUIRE_THROWS_AS(heralded_g2(three, 0.0, n_si1, si2), validation_error);
}

TEST_CASE("heralded point picks the herald-coincidence peak bin") {
    Histogram three;
    three.bin_width = 300;
    three.origin = 0;
    three.acquisition_time = 1.0;
    three.n_start = 10;
    three.n_stop = 10;
    three.counts = {1, 1, 9, 1};
    Histogram si2 = three;
    si2.counts = {10, 10, 400, 10};
    const auto c = heralded_g2(three, 100.0, 10.0, si2);
    const auto p = heralded_g2_at_peak(c, si2);
    REQUIRE(p.tau_ps == Catch::Approx(si2.bin_center(2)));
    REQUIRE(p.g2 == Catch::Approx(9.0 * 100.0 / (10.0 * 400.0)));
}

TEST_CASE("curve bin lookup") {
    CorrelationCurve c;
    for (int i = 0; i < 10; ++i) {
        c.tau.push_back(-4500.0 + i * 1000.0);
        c.g2.push_back(1.0);
        c.sigma_g2.push_back(0.1);
    }
    REQUIRE(c.bin_at(0.0).value() == 5);
    REQUIRE(c.bin_at(-5000.0).value() == 0);
    REQUIRE_FALSE(c.bin_at(-5001.0).has_value());
    REQUIRE_FALSE(c.bin_at(5000.0).has_value());
}
