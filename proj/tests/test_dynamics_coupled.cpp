#include <catch_amalgamated.hpp>

#include <cmath>

#include "joma/core/rng.hpp"
#include "joma/dynamics/coupled.hpp"

using namespace joma;
using namespace joma::dyn;
using Catch::Matchers::WithinAbs;

namespace {

RealVector vec(std::initializer_list<double> v)
{
    RealVector r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
}

GradStats random_stats(num::Rng& rng, int M, int K, int C, double scale)
{
    GradStats s;
    s.x = RealMatrix(M, C);
    s.g = RealMatrix(C, K);
    double tot = 0;
    for (int c = 0; c < C; ++c) {
        double col = 0;
        for (int l = 0; l < M; ++l) col += (s.x(l, c) = rng.uniform(0.05, 1.0));
        s.x.col(c) /= col;
        for (int k = 0; k < K; ++k) s.g(c, k) = scale * rng.uniform(-1.0, 1.0);
        s.weight.push_back(rng.uniform(0.5, 1.5));
        tot += s.weight.back();
    }
    for (auto& w : s.weight) w /= tot;
    return s;
}

} // namespace

TEST_CASE("attention_reweight examples")
{
    auto b = attention_reweight(vec({1, 2}), vec({0.5, 0.5}), AttentionKind::linear());
    REQUIRE(b(0) == 0.5);
    REQUIRE(b(1) == 1.0);
    b = attention_reweight(vec({0, 0}), vec({0.5, 0.5}), AttentionKind::softmax());
    REQUIRE_THAT(b(0), WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(b(1), WithinAbs(0.5, 1e-15));
    b = attention_reweight(vec({0, std::log(2.0)}), vec({1, 1}), AttentionKind::exp(1.0));
    REQUIRE_THAT(b(0), WithinAbs(1.0, 1e-15));
    REQUIRE_THAT(b(1), WithinAbs(2.0, 1e-15));
    REQUIRE_THROWS_AS(attention_reweight(vec({0, 0}), vec({0, 0}), AttentionKind::softmax()), degenerate_error);
    REQUIRE_THROWS_AS(AttentionKind::exp(0.0), domain_error);
}

TEST_CASE("attention_vjp matches finite differences")
{
    num::Rng rng(4);
    for (auto kind : {AttentionKind::linear(), AttentionKind::exp(1.7), AttentionKind::softmax()}) {
        RealVector z(5), x(5), g(5);
        for (int i = 0; i < 5; ++i) {
            z(i) = rng.normal();
            x(i) = rng.uniform(0.1, 1);
            g(i) = rng.normal();
        }
        const RealVector b = attention_reweight(z, x, kind);
        const RealVector an = attention_vjp(x, b, g, kind);
        for (int j = 0; j < 5; ++j) {
            RealVector zp = z, zm = z;
            zp(j) += 1e-6;
            zm(j) -= 1e-6;
            const double fd = (g.dot(attention_reweight(zp, x, kind)) - g.dot(attention_reweight(zm, x, kind))) / 2e-6;
            REQUIRE_THAT(an(j), WithinAbs(fd, 1e-8));
        }
    }
}

TEST_CASE("first step from zero init moves v by eta * Delta")
{
    num::Rng rng(8);
    auto stats = random_stats(rng, 6, 3, 4, 1.0);
    auto s = coupled_step(CoupledState::zero(6, 3), stats, AttentionKind::exp(1.0), 1e-3);
    REQUIRE((s.V - 1e-3 * stats.delta()).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(s.step == 1);
    REQUIRE(s.z.isZero());
}

TEST_CASE("opposite components cancel")
{
    GradStats st;
    st.x = RealMatrix(3, 2);
    st.x.col(0) << 0.2, 0.3, 0.5;
    st.x.col(1) = st.x.col(0);
    st.g = RealMatrix(2, 2);
    st.g << 1.0, -0.5, -1.0, 0.5;
    st.weight = {0.5, 0.5};
    for (auto kind : {AttentionKind::exp(1.0), AttentionKind::softmax()}) {
        auto tr = simulate_coupled(CoupledState::zero(3, 2), st, kind, 1e-2, 500, 100);
        for (const auto& snap : tr.snapshots) {
            REQUIRE(snap.state.V.isZero());
            REQUIRE(snap.state.z.isZero());
        }
    }
}

TEST_CASE("invariant_estimate examples")
{
    auto s = CoupledState::zero(2, 1);
    REQUIRE(invariant_estimate(s, AttentionKind::exp()).isZero());
    s.V.col(0) << 1, 2;
    auto z = invariant_estimate(s, AttentionKind::exp());
    REQUIRE(z(0) == 0.5);
    REQUIRE(z(1) == 2.0);
}

TEST_CASE("exp attention invariant drift is first order in eta")
{
    num::Rng rng(21);
    auto stats = random_stats(rng, 6, 3, 4, 0.3);
    const auto kind = AttentionKind::exp(1.0);
    auto coarse = simulate_coupled(CoupledState::zero(6, 3), stats, kind, 1e-2, 200, 200);
    auto fine = simulate_coupled(CoupledState::zero(6, 3), stats, kind, 1e-3, 2000, 2000);
    const double rc = invariant_residual(coarse, kind).back();
    const double rf = invariant_residual(fine, kind).back();
    REQUIRE(invariant_residual(coarse, kind).front() == 0.0);
    REQUIRE(rf < rc);
    REQUIRE(rc / rf > 5.0);
    REQUIRE(rc / rf < 20.0);
}

TEST_CASE("trajectory times must increase")
{
    Trajectory<CoupledState> tr;
    tr.metric_names = {};
    tr.push(0.0, CoupledState::zero(1, 1));
    REQUIRE_THROWS_AS(tr.push(0.0, CoupledState::zero(1, 1)), domain_error);
}
