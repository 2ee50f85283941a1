#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "joma/core/special.hpp"
#include "oracles.hpp"

namespace num = joma::num;
using Catch::Matchers::WithinAbs;

TEST_CASE("erf matches the defining integral")
{
    REQUIRE(num::erf(0.0) == 0.0);
    REQUIRE_THAT(num::erf(1.0), WithinAbs(0.8427007929, 1e-9));
    for (double x = -3.0; x <= 3.0; x += 0.125) {
        REQUIRE_THAT(num::erf(x), WithinAbs(oracle::erf_series(x), 1e-12));
        REQUIRE_THAT(num::erf(x), WithinAbs(oracle::erf_integral(x), 1e-12));
    }
}

TEST_CASE("erf is odd, increasing and bounded")
{
    double prev = -1.0;
    for (double x = -6.0; x <= 6.0; x += 1e-3) {
        const double e = num::erf(x);
        REQUIRE(e == -num::erf(-x));
        REQUIRE(e >= prev - 1e-12);
        REQUIRE(std::abs(e) <= 1.0);
        prev = e;
    }
}

TEST_CASE("erf_inv round trips and matches bisection")
{
    REQUIRE(num::erf_inv(0.0) == 0.0);
    REQUIRE_THAT(num::erf_inv(num::erf(0.7)), WithinAbs(0.7, 1e-10));
    const double bis = oracle::bisect([](double x) { return oracle::erf_series(x) - 0.5; }, 0.0, 2.0);
    REQUIRE_THAT(num::erf_inv(0.5), WithinAbs(bis, 1e-12));
    REQUIRE_THAT(num::erf_inv(0.5), WithinAbs(0.4769362762, 1e-8));
    for (double y = -0.999; y < 0.999; y += 1e-3) REQUIRE_THAT(num::erf(num::erf_inv(y)), WithinAbs(y, 1e-9));
    for (double y : {0.9999, 0.999999, 1 - 1e-12, -1 + 1e-12}) REQUIRE_THAT(num::erf(num::erf_inv(y)), WithinAbs(y, 1e-10));
}

TEST_CASE("erf_inv rejects the closed interval ends")
{
    REQUIRE_THROWS_AS(num::erf_inv(1.0), joma::domain_error);
    REQUIRE_THROWS_AS(num::erf_inv(-1.0), joma::domain_error);
    REQUIRE_THROWS_AS(num::erf_inv(2.0), joma::domain_error);
}

TEST_CASE("g and G satisfy their bounds on the dense grid")
{
    REQUIRE(num::g_func(0.0) == 0.0);
    REQUIRE(num::G_func(0.0) == 0.0);
    double gmax = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double y = i * 1e-3;
        const double g = num::g_func(y);
        const double G = num::G_func(y);
        REQUIRE(std::isfinite(g));
        REQUIRE(g <= 1.0 / std::sqrt(2.0));
        REQUIRE(G >= 0.0);
        REQUIRE(G <= 1.0);
        gmax = std::max(gmax, g);
    }
    REQUIRE(gmax > 0.6);
    REQUIRE_THROWS_AS(num::g_func(-1.0), joma::domain_error);
}

TEST_CASE("G agrees with an independent Simpson evaluation")
{
    for (double y : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double ref = oracle::simpson([y](double x) { return std::exp(0.5 * (x * x - y * y)); }, 0.0, y);
        REQUIRE_THAT(num::G_func(y), WithinAbs(ref, 1e-10));
    }
    // G(y) ~ 1/y for large y
    REQUIRE_THAT(num::G_func(10.0) * 10.0, WithinAbs(1.0, 2e-2));
}
