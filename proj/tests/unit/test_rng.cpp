#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ppb/rng.hpp"

using ppb::Rng;

TEST_CASE("identical seeds give identical draw sequences") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    REQUIRE(same == 0);
}

TEST_CASE("uniform moments") {
    Rng rng(7);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    REQUIRE(std::abs(mean - 0.5) < 5.0 / std::sqrt(12.0 * n));
    REQUIRE(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("exponential mean and causality") {
    Rng rng(11);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.exponential(2.5);
        REQUIRE(x > 0.0);
        sum += x;
    }
    // relative sigma of the mean is 1/sqrt(n)
    REQUIRE(std::abs(sum / n - 2.5) < 5.0 * 2.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("normal moments") {
    Rng rng(13);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(3.0, 2.0);
        sum += x;
        sum2 += (x - 3.0) * (x - 3.0);
    }
    REQUIRE(std::abs(sum / n - 3.0) < 5.0 * 2.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(sum2 / n - 4.0) < 0.1);
}

TEST_CASE("bernoulli frequency") {
    Rng rng(17);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i)
        if (rng.bernoulli(0.3)) ++hits;
    const double sigma = std::sqrt(n * 0.3 * 0.7);
    REQUIRE(std::abs(hits - 0.3 * n) < 5.0 * sigma);
}

TEST_CASE("forked generators are reproducible and uncorrelated") {
    Rng parent1(99), parent2(99);
    Rng c1 = parent1.fork(5);
    Rng c2 = parent2.fork(5);
    for (int i = 0; i < 100; ++i) REQUIRE(c1.next_u64() == c2.next_u64());

    Rng parent3(99);
    Rng a = parent3.fork(1);
    Rng b = parent3.fork(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    REQUIRE(same == 0);
}
