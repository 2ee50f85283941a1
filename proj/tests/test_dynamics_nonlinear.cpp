#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "joma/core/rng.hpp"
#include "joma/dynamics/nonlinear.hpp"
#include "oracles.hpp"

using namespace joma;
using namespace joma::dyn;
using Catch::Matchers::WithinAbs;

namespace {

const double inv_sqrt_2pi = 1.0 / std::sqrt(2 * std::numbers::pi);
double Phi(double r) { return 0.5 * std::erfc(-r / std::sqrt(2.0)); }
double phi(double r) { return inv_sqrt_2pi * std::exp(-0.5 * r * r); }

num::RadialDensity spike_and_ring()
{
    return num::RadialDensity::custom_from(
        2, [](double r) { return std::exp(-0.5 * r * r / 0.09) + 0.08 * std::exp(-0.5 * (r - 3) * (r - 3) / 0.09); },
        5.0, 401);
}

} // namespace

TEST_CASE("theta integrals for step psi and Gaussian marginal")
{
    const auto psi = ActivationDerivative::step();
    const auto p = num::RadialDensity::standard_gaussian(3);
    REQUIRE_THAT(theta1(0, psi, p), WithinAbs(0.5, 1e-6));
    REQUIRE_THAT(theta2(0, psi, p), WithinAbs(inv_sqrt_2pi, 1e-6));
    REQUIRE(theta1(-10, psi, p) <= 1e-6);
    REQUIRE(theta1(10, psi, p) >= 1 - 1e-6);
    double prev = -1;
    for (double r = -6; r <= 6; r += 0.05) {
        const double t1 = theta1(r, psi, p);
        REQUIRE_THAT(t1, WithinAbs(Phi(r), 1e-11));
        REQUIRE_THAT(theta2(r, psi, p), WithinAbs(phi(r), 1e-11));
        REQUIRE(t1 >= prev);
        REQUIRE(t1 >= 0.0);
        REQUIRE(t1 <= 1.0);
        prev = t1;
    }
}

TEST_CASE("theta integrals for leaky step psi")
{
    const auto psi = ActivationDerivative::leaky_step(0.1, 1.0);
    const auto p = num::RadialDensity::standard_gaussian(1);
    for (double r : {-2.0, -0.3, 0.0, 1.1}) {
        REQUIRE_THAT(theta1(r, psi, p), WithinAbs(0.1 * Phi(-r) + Phi(r), 1e-11));
        REQUIRE_THAT(theta2(r, psi, p), WithinAbs(0.9 * phi(r), 1e-11));
    }
}

TEST_CASE("theta integrals for the uniform ball")
{
    const auto psi = ActivationDerivative::step();
    const auto p = num::RadialDensity::uniform_ball(3, 1.0);
    for (double r : {-0.9, -0.2, 0.0, 0.5, 0.99}) {
        REQUIRE_THAT(theta1(r, psi, p), WithinAbs(0.5 + 0.75 * (r - r * r * r / 3), 1e-10));
        REQUIRE_THAT(theta2(r, psi, p), WithinAbs(0.75 * (0.25 - (r * r / 2 - r * r * r * r / 4)), 1e-10));
    }
    REQUIRE(theta1(-1.5, psi, p) == 0.0);
    REQUIRE_THAT(theta1(1.5, psi, p), WithinAbs(1.0, 1e-12));
}

TEST_CASE("theta integrals for a tabulated sigmoid-like psi")
{
    const auto psi = ActivationDerivative::sigmoid_like();
    const auto p = num::RadialDensity::standard_gaussian(2);
    for (double r : {-1.0, 0.0, 2.0}) {
        const double ref = oracle::simpson([&](double y) { return psi(y + r) * phi(y); }, -12, 12, 200000);
        REQUIRE_THAT(theta1(r, psi, p), WithinAbs(ref, 1e-9));
    }
    REQUIRE_THAT(theta1(0, psi, p), WithinAbs(0.5, 1e-9));
    REQUIRE_THROWS_AS(F_of_r(0.0, psi, p), domain_error);
}

TEST_CASE("F(r) starts at theta_2(0), increases and has derivative theta_1")
{
    const auto psi = ActivationDerivative::step();
    const auto p = num::RadialDensity::standard_gaussian(2);
    REQUIRE_THAT(F_of_r(0, psi, p), WithinAbs(inv_sqrt_2pi, 1e-9));
    double prev = -1;
    for (double r = -5; r <= 5 + 1e-9; r += 0.25) {
        const double F = F_of_r(r, psi, p);
        REQUIRE(F > prev);
        prev = F;
        // homogeneous psi: F(r) = theta_2(r) + r theta_1(r)
        REQUIRE_THAT(F, WithinAbs(theta2(r, psi, p) + r * theta1(r, psi, p), 1e-9));
        const double h = 1e-4;
        auto G = [&](double x) { return theta2(x, psi, p) + x * theta1(x, psi, p); };
        REQUIRE_THAT((G(r + h) - G(r - h)) / (2 * h), WithinAbs(theta1(r, psi, p), 1e-4));
    }
}

TEST_CASE("delta_nonlinear plug-in values")
{
    const auto psi = ActivationDerivative::step();
    const auto p = num::RadialDensity::standard_gaussian(3);
    RealVector xbar(3), v(3);
    xbar << 1, 0, 0;
    v << 0, 1, 0;
    MixtureSpec mix{{{xbar, 0.7, p}}, 0};
    auto d = delta_nonlinear(v, 0.0, mix, psi);
    RealVector expect = 0.7 * 0.5 * xbar + 0.7 * theta2(0, psi, p) * v;
    REQUIRE((d - expect).cwiseAbs().maxCoeff() < 1e-9);
    MixtureSpec zero{{{xbar, 0.0, p}}, 0};
    REQUIRE(delta_nonlinear(v, 0.0, zero, psi).isZero());
    REQUIRE_THROWS_AS(zero.validate(), domain_error);
    REQUIRE_THROWS_AS(delta_nonlinear(RealVector::Zero(3), 0.0, mix, psi), degenerate_error);
}

TEST_CASE("delta_nonlinear matches a Monte-Carlo estimate")
{
    const auto psi = ActivationDerivative::step();
    const int M = 4;
    const auto p = num::RadialDensity::standard_gaussian(M);
    num::Rng rng(314);
    for (int cfg = 0; cfg < 2; ++cfg) {
        MixtureSpec mix;
        for (int c = 0; c < 3; ++c) {
            RealVector center(M);
            for (int l = 0; l < M; ++l) center(l) = rng.uniform(0, 2);
            mix.components.push_back({center, rng.uniform(-1, 1), p});
        }
        RealVector v(M);
        for (int l = 0; l < M; ++l) v(l) = rng.normal();
        const double xi = rng.uniform(-1, 1);
        const RealVector analytic = delta_nonlinear(v, xi, mix, psi);

        const int N = 200000;
        RealVector mean = RealVector::Zero(M), var = RealVector::Zero(M);
        for (const auto& comp : mix.components) {
            RealVector s = RealVector::Zero(M), s2 = RealVector::Zero(M);
            for (int i = 0; i < N; ++i) {
                RealVector x(M);
                for (int l = 0; l < M; ++l) x(l) = comp.center(l) + rng.normal();
                const RealVector y = x * psi(v.dot(x) + xi);
                s += y;
                s2 += y.cwiseProduct(y);
            }
            const RealVector m = s / N;
            mean += comp.coefficient * m;
            var += comp.coefficient * comp.coefficient * (s2 / N - m.cwiseProduct(m)) / N;
        }
        for (int l = 0; l < M; ++l) REQUIRE(std::abs(mean(l) - analytic(l)) <= 3 * std::sqrt(var(l)));
    }
}

TEST_CASE("Gaussian two-component mixtures have no stationary points")
{
    const auto psi = ActivationDerivative::step();
    RealVector xp(2), xm(2);
    xp << 1.5, 0.2;
    xm << 0.1, 0.4;
    auto pts = two_component_stationary_points(xp, xm, num::RadialDensity::standard_gaussian(2), psi, 1.0, -6, 4, 60);
    REQUIRE(pts.empty());
}

TEST_CASE("stationary points of a spike-and-ring mixture satisfy the F-condition")
{
    const auto psi = ActivationDerivative::step();
    const auto density = spike_and_ring();
    num::QuadratureSpec spec{1e-11, 1e-11, 4000, 12};
    RealVector xp(2), xm(2);
    xp << 1.0, 0.3;
    xm << 0.2, 0.5;
    auto pts = two_component_stationary_points(xp, xm, density, psi, 1.0, -4.5, 4.5, 90, spec);
    REQUIRE(!pts.empty());
    for (const auto& sp : pts) {
        REQUIRE(sp.field_norm < 1e-7);
        MixtureSpec mix{{{xp, sp.a_plus, density}, {xm, sp.a_minus, density}}, 0};
        REQUIRE(std::abs(critical_residual(sp.v, sp.xi, mix, psi, spec)) <= 1e-4);
        // scale invariance of the field in (v, xi)
        auto r2 = nonlinear_rates(2.0 * sp.v, 2.0 * sp.xi, mix, psi, spec);
        REQUIRE(r2.vdot.cwiseAbs().maxCoeff() < 1e-6);
    }
}
