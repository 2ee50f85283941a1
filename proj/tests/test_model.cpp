#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "joma/core/metrics.hpp"
#include "joma/hblt.hpp"
#include "joma/model.hpp"

using namespace joma;
using namespace joma::model;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelConfig small_config(AttentionKind kind, Activation act, int layers, InputMode mode = InputMode::causal)
{
    ModelConfig c;
    c.vocab = 6;
    c.classes = 3;
    c.d = 9;
    c.hidden = 5;
    c.layers = layers;
    c.sequence_length = 4;
    c.activation = act;
    c.attention = kind;
    c.mode = mode;
    return c;
}

std::vector<hblt::SequenceSample> random_sequences(const ModelConfig& c, std::size_t n, std::uint64_t seed)
{
    num::Rng rng(seed);
    std::vector<hblt::SequenceSample> out(n);
    for (auto& s : out) {
        s.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(c.classes)));
        for (int i = 0; i < c.sequence_length; ++i) s.tokens.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(c.vocab))));
    }
    return out;
}

// Random logits and weights so every code path is exercised away from the initialization.
ModelParams perturbed(const ModelConfig& c, std::uint64_t seed)
{
    ModelParams p = init_params(c, seed);
    num::Rng rng(seed + 100);
    for (auto* t : p.tensors())
        for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] += 0.3 * rng.normal();
    if (c.attention.tag == AttentionKind::Tag::linear)
        for (auto& l : p.layers) l.Z.array() += 1.0;
    return p;
}

// Straight-line re-implementation: explicit loops, one position at a time.
namespace oracle_net {

double phi(double x, Activation a) { return a == Activation::linear ? x : (x > 0 ? x : 0); }

std::vector<double> attend(const std::vector<double>& z, const std::vector<double>& x, const AttentionKind& k)
{
    std::vector<double> b(z.size());
    double s = 0;
    for (std::size_t l = 0; l < z.size(); ++l) {
        switch (k.tag) {
        case AttentionKind::Tag::linear: b[l] = z[l] * x[l]; break;
        case AttentionKind::Tag::exp: b[l] = std::exp(z[l]) * x[l] / k.normalizer; break;
        case AttentionKind::Tag::softmax: b[l] = std::exp(z[l]) * x[l]; s += b[l]; break;
        }
    }
    if (k.tag == AttentionKind::Tag::softmax)
        for (auto& v : b) v /= s;
    return b;
}

std::vector<double> logits(const ModelParams& p, const std::vector<int>& tokens)
{
    const auto& c = p.config;
    const int P = c.positions();
    std::vector<std::vector<double>> prev;
    for (int s = 0; s < c.layers; ++s) {
        const auto& L = p.layers[static_cast<std::size_t>(s)];
        std::vector<std::vector<double>> out(static_cast<std::size_t>(P), std::vector<double>(static_cast<std::size_t>(c.d)));
        for (int i = 0; i < P; ++i) {
            std::vector<double> f(static_cast<std::size_t>(c.d), 0.0);
            if (s == 0) {
                std::vector<double> x(static_cast<std::size_t>(c.vocab), 0.0), z(static_cast<std::size_t>(c.vocab));
                const int upto = c.mode == InputMode::causal ? i + 1 : static_cast<int>(tokens.size());
                for (int j = 0; j < upto; ++j) x[static_cast<std::size_t>(tokens[static_cast<std::size_t>(j)])] += 1.0 / upto;
                for (int l = 0; l < c.vocab; ++l) z[static_cast<std::size_t>(l)] = L.Z(0, l);
                const auto b = attend(z, x, c.attention);
                for (int r = 0; r < c.d; ++r) {
                    f[static_cast<std::size_t>(r)] = p.U(r, c.vocab);
                    for (int l = 0; l < c.vocab; ++l) f[static_cast<std::size_t>(r)] += p.U(r, l) * b[static_cast<std::size_t>(l)];
                }
            } else {
                std::vector<double> x(static_cast<std::size_t>(i + 1), 1.0 / (i + 1)), z(static_cast<std::size_t>(i + 1));
                for (int j = 0; j <= i; ++j) z[static_cast<std::size_t>(j)] = L.Z(i, j);
                const auto b = attend(z, x, c.attention);
                for (int j = 0; j <= i; ++j)
                    for (int r = 0; r < c.d; ++r)
                        f[static_cast<std::size_t>(r)] += b[static_cast<std::size_t>(j)] * prev[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
            }
            auto& o = out[static_cast<std::size_t>(i)];
            o = f;
            for (int k = 0; k < c.hidden; ++k) {
                double a = 0;
                for (int r = 0; r < c.d; ++r) a += L.W(r, k) * f[static_cast<std::size_t>(r)];
                const double h = phi(a, c.activation);
                for (int r = 0; r < c.d; ++r) o[static_cast<std::size_t>(r)] += L.A(r, k) * h;
            }
        }
        prev = std::move(out);
    }
    std::vector<double> y(static_cast<std::size_t>(c.classes), 0.0);
    for (int q = 0; q < c.classes; ++q)
        for (int r = 0; r < c.d; ++r) y[static_cast<std::size_t>(q)] += p.C(q, r) * prev.back()[static_cast<std::size_t>(r)];
    return y;
}

double cross_entropy(const ModelParams& p, const std::vector<hblt::SequenceSample>& samples)
{
    double total = 0;
    for (const auto& s : samples) {
        const auto y = logits(p, s.tokens);
        double z = 0;
        for (double v : y) z += std::exp(v);
        total += std::log(z) - y[static_cast<std::size_t>(s.label)];
    }
    return total / static_cast<double>(samples.size());
}

} // namespace oracle_net

const std::vector<std::pair<AttentionKind, Activation>> variants{
    {AttentionKind::softmax(), Activation::relu},
    {AttentionKind::exp(2.0), Activation::linear},
    {AttentionKind::linear(), Activation::relu},
};

} // namespace

TEST_CASE("embeddings are orthonormal", "[model][params]")
{
    ModelConfig c;
    const auto p = init_params(c, 3);
    CHECK(p.U.rows() == 128);
    CHECK(p.U.cols() == 101);
    CHECK((p.U.transpose() * p.U - RealMatrix::Identity(101, 101)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(num::mean_abs_cossim(p.U) <= 1e-10);
    c.d = 100;
    CHECK_THROWS_AS(init_params(c, 3), joma::config_error);
}

TEST_CASE("forward definitions", "[model][forward]")
{
    SECTION("zero W: hidden units vanish and the output is the residual stream")
    {
        auto c = small_config(AttentionKind::softmax(), Activation::linear, 1, InputMode::frequency);
        auto p = init_params(c, 1);
        p.layers[0].W.setZero();
        const auto seqs = random_sequences(c, 3, 5);
        const auto batch = make_batch(c, seqs);
        const auto fp = forward(p, batch);
        CHECK(fp.layers[0].H.cwiseAbs().maxCoeff() == 0.0);
        CHECK((fp.logits - p.C * fp.layers[0].F).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SECTION("one-hot input with uniform logits")
    {
        auto c = small_config(AttentionKind::softmax(), Activation::relu, 1, InputMode::frequency);
        const auto p = perturbed(c, 2);
        auto q = p;
        q.layers[0].Z.setZero();
        hblt::SequenceSample s;
        s.tokens = {3, 3, 3, 3};
        const auto fp = forward(q, make_batch(c, {s}));
        const RealVector f = q.U.col(3) + q.U.col(c.vocab);
        CHECK((fp.layers[0].F.col(0) - f).cwiseAbs().maxCoeff() <= 1e-15);
        const RealVector h = (q.layers[0].W.transpose() * f).cwiseMax(0.0);
        CHECK((fp.layers[0].H.col(0) - h).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SECTION("matches the straight-line implementation")
    {
        for (const auto& [kind, act] : variants)
            for (auto mode : {InputMode::causal, InputMode::frequency})
                for (int layers : {1, 3}) {
                    const auto c = small_config(kind, act, layers, mode);
                    const auto p = perturbed(c, 7 + static_cast<std::uint64_t>(layers));
                    const auto seqs = random_sequences(c, 6, 11);
                    const auto fp = forward(p, make_batch(c, seqs));
                    for (std::size_t b = 0; b < seqs.size(); ++b) {
                        const auto y = oracle_net::logits(p, seqs[b].tokens);
                        for (int q = 0; q < c.classes; ++q)
                            CHECK_THAT(fp.logits(q, static_cast<Eigen::Index>(b)),
                                       WithinAbs(y[static_cast<std::size_t>(q)], 1e-12 * std::max(1.0, std::abs(y[static_cast<std::size_t>(q)]))));
                    }
                    CHECK_THAT(loss_value(p, make_batch(c, seqs), Objective::cross_entropy),
                               WithinAbs(oracle_net::cross_entropy(p, seqs), 1e-12));
                }
    }
    SECTION("batch validation")
    {
        auto c = small_config(AttentionKind::softmax(), Activation::relu, 1);
        hblt::SequenceSample s;
        s.tokens = {1, 2};
        CHECK_THROWS_AS(make_batch(c, {s}), joma::size_error);
        s.tokens = {1, 2, 9, 0};
        CHECK_THROWS_AS(make_batch(c, {s}), joma::domain_error);
    }
}

TEST_CASE("gradients", "[model][grad]")
{
    SECTION("analytic gradients match central differences of the straight-line loss")
    {
        for (const auto& [kind, act] : variants) {
            const auto c = small_config(kind, act, 3);
            auto p = perturbed(c, 21);
            const auto seqs = random_sequences(c, 5, 4);
            const auto g = loss_and_grads(p, make_batch(c, seqs), Objective::cross_entropy);
            auto ga = g.grads;
            auto grads = ga.tensors();
            auto params = p.tensors();
            const auto names = p.tensor_names();
            double worst = 0;
            for (std::size_t t = 0; t < params.size(); ++t)
                for (Eigen::Index i = 0; i < params[t]->size(); ++i) {
                    double& w = params[t]->data()[i];
                    const double keep = w;
                    w = keep + 1e-5;
                    const double up = oracle_net::cross_entropy(p, seqs);
                    w = keep - 1e-5;
                    const double down = oracle_net::cross_entropy(p, seqs);
                    w = keep;
                    const double num = (up - down) / 2e-5, a = grads[t]->data()[i];
                    worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-6}));
                }
            INFO(kind.name() << " / " << name(act));
            CHECK(worst <= 1e-4);
        }
    }
    SECTION("library gradcheck covers the payoff objective")
    {
        for (const auto& [kind, act] : variants) {
            const auto c = small_config(kind, act, 2);
            const auto batch = make_batch(c, random_sequences(c, 5, 8));
            const auto r = gradcheck(perturbed(c, 5), batch, Objective::node_payoff);
            INFO(r.worst_tensor);
            CHECK(r.max_rel_error <= 1e-4);
            CHECK(gradcheck(perturbed(c, 6), batch, Objective::cross_entropy).max_rel_error <= 1e-4);
        }
    }
    SECTION("symmetric batch is stationary")
    {
        auto c = small_config(AttentionKind::softmax(), Activation::relu, 2);
        c.classes = 2;
        auto p = perturbed(c, 3);
        p.C.setZero();
        auto seqs = random_sequences(c, 1, 2);
        seqs.push_back(seqs[0]);
        seqs[0].label = 0;
        seqs[1].label = 1;
        const auto g = loss_and_grads(p, make_batch(c, seqs), Objective::cross_entropy);
        CHECK(g.grads.max_abs() <= 1e-10);
    }
    SECTION("payoff step with linear units moves w_k by eta E[g_k f]")
    {
        auto c = small_config(AttentionKind::exp(), Activation::linear, 1, InputMode::frequency);
        auto p = perturbed(c, 9);
        const auto seqs = random_sequences(c, 8, 3);
        const auto batch = make_batch(c, seqs);
        const RealMatrix F = forward(p, batch).layers[0].F;
        RealMatrix expected = RealMatrix::Zero(c.d, c.hidden);
        for (std::size_t b = 0; b < seqs.size(); ++b)
            for (int k = 0; k < c.hidden; ++k)
                expected.col(k) += payoff_weight(k, seqs[b].label, c.classes) * F.col(static_cast<Eigen::Index>(b)) / 8.0;
        const RealMatrix W0 = p.layers[0].W;
        OptimizerConfig oc;
        oc.kind = OptimizerConfig::Kind::sgd;
        oc.lr = 0.05;
        Optimizer opt(oc, p);
        auto g = loss_and_grads(p, batch, Objective::node_payoff);
        opt.step(p, g.grads);
        CHECK(((p.layers[0].W - W0) - 0.05 * expected).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("attention entropy", "[model][entropy]")
{
    auto c = small_config(AttentionKind::softmax(), Activation::relu, 1, InputMode::frequency);
    auto p = init_params(c, 1);
    hblt::SequenceSample s;
    s.tokens = {0, 1, 2, 3, 4, 5};
    const auto batch = make_batch(c, {s});
    CHECK_THAT(attention_entropy(p, batch)[0], WithinAbs(std::log(6.0), 1e-14));
    p.layers[0].Z(0, 2) = 30;
    CHECK(attention_entropy(p, batch)[0] <= 1e-8);

    auto lin = small_config(AttentionKind::linear(), Activation::relu, 1, InputMode::frequency);
    auto q = init_params(lin, 1);
    q.layers[0].Z.setConstant(-1.0);
    CHECK_THROWS_AS(attention_entropy(q, make_batch(lin, {s})), joma::degenerate_error);
}

TEST_CASE("training", "[model][train]")
{
    hblt::HbltSpec spec = hblt::HbltSpec::regular(3, 3, 0.8, 3, 2, 6);
    const auto corpus = hblt::sample(spec, 300, 4);
    const std::vector<hblt::SequenceSample> train_set(corpus.begin(), corpus.begin() + 250), val(corpus.begin() + 250, corpus.end());
    TrainConfig cfg;
    cfg.model.vocab = spec.vocab();
    cfg.model.classes = 3;
    cfg.model.d = 16;
    cfg.model.hidden = 8;
    cfg.model.layers = 2;
    cfg.model.sequence_length = 6;
    cfg.steps = 40;
    cfg.stride = 10;
    cfg.batch_size = 8;
    cfg.eval_samples = 50;
    cfg.seed = 17;
    cfg.keep_weights = true;

    SECTION("same seed gives identical series, U stays frozen")
    {
        const auto a = train(cfg, train_set, val);
        const auto b = train(cfg, train_set, val);
        std::ostringstream sa, sb;
        write_csv(sa, a.series);
        write_csv(sb, b.series);
        CHECK(sa.str() == sb.str());
        CHECK(a.series.rows.size() == 5);
        CHECK(sa.str().rfind("step,loss,val_loss,entropy_l0,entropy_l1,srank_l0,srank_l1\n", 0) == 0);
        const auto init = init_params(cfg.model, cfg.seed);
        CHECK(std::memcmp(init.U.data(), a.params.U.data(), sizeof(double) * static_cast<std::size_t>(init.U.size())) == 0);
        CHECK(a.series.rows.back().loss < a.series.rows.front().loss);
    }
    SECTION("zero learning rate leaves every metric constant")
    {
        cfg.optimizer.kind = OptimizerConfig::Kind::sgd;
        cfg.optimizer.lr = 0;
        const auto r = train(cfg, train_set, val);
        for (const auto& row : r.series.rows) {
            CHECK(row.loss == r.series.rows[0].loss);
            CHECK(row.val_loss == r.series.rows[0].val_loss);
            CHECK(row.entropy == r.series.rows[0].entropy);
            CHECK(row.srank == r.series.rows[0].srank);
        }
        const auto sr = stable_rank_series(r.series.weights);
        for (const auto& row : sr) CHECK(row == sr.front());
    }
    SECTION("divergence is reported")
    {
        cfg.optimizer.kind = OptimizerConfig::Kind::sgd;
        cfg.optimizer.lr = 1e12;
        cfg.model.activation = Activation::linear;
        cfg.model.attention = AttentionKind::exp();
        cfg.steps = 500;
        CHECK_THROWS_AS(train(cfg, train_set, val), joma::divergence_error);
    }
    SECTION("invalid configuration")
    {
        cfg.steps = 0;
        CHECK_THROWS_AS(train(cfg, train_set, val), joma::config_error);
    }
}

TEST_CASE("trained logits follow the joint invariant", "[model][train][theory]")
{
    // one layer, per-node payoff, linear units, exp attention, SGD with a small step
    hblt::HbltSpec spec = hblt::HbltSpec::regular(3, 2, 0.8, 2, 2, 10);
    const auto corpus = hblt::sample(spec, 400, 6);
    TrainConfig cfg;
    cfg.model.vocab = spec.vocab();
    cfg.model.classes = 2;
    cfg.model.d = 12;
    cfg.model.hidden = 4;
    cfg.model.layers = 1;
    cfg.model.mode = InputMode::frequency;
    cfg.model.sequence_length = 10;
    cfg.model.activation = Activation::linear;
    cfg.model.attention = AttentionKind::exp();
    cfg.model.w_scale = 0.05;
    cfg.objective = Objective::node_payoff;
    cfg.optimizer.kind = OptimizerConfig::Kind::sgd;
    cfg.optimizer.lr = 0.01;
    cfg.steps = 400;  // horizon t = 4, before the finite-time blow-up of exp attention
    cfg.stride = 20;
    cfg.batch_size = 16;
    cfg.eval_samples = 20;
    std::vector<double> half_sq, z;
    train(cfg, corpus, {}, [&](const ModelParams& p, const MetricsSnapshot&) {
        const RealMatrix V = p.context_embeddings().transpose() * p.layers[0].W;  // M_C x K, columns v_k
        for (int l = 0; l < cfg.model.vocab; ++l) {
            half_sq.push_back(0.5 * V.row(l).squaredNorm());
            z.push_back(p.layers[0].Z(0, l));
        }
    });
    const double r = num::pearson(half_sq, z);
    INFO("max z " << *std::max_element(z.begin(), z.end()) << ", corr " << r);
    CHECK(r >= 0.95);
}

TEST_CASE("checkpoint container", "[model][io]")
{
    auto c = small_config(AttentionKind::softmax(), Activation::relu, 2);
    const auto p = perturbed(c, 4);
    std::stringstream ss;
    write_checkpoint(ss, param_tensors(p));
    const auto q = params_from_tensors(c, read_checkpoint(ss));
    CHECK(q.U == p.U);
    const auto pt = p.tensors();
    const auto qt = q.tensors();
    for (std::size_t i = 0; i < pt.size(); ++i) CHECK(*pt[i] == *qt[i]);

    std::stringstream bad("NOTACKPT");
    CHECK_THROWS_AS(read_checkpoint(bad), joma::io_error);
    std::stringstream cut(ss.str().substr(0, 40));
    std::stringstream full;
    write_checkpoint(full, param_tensors(p));
    std::stringstream truncated(full.str().substr(0, full.str().size() - 3));
    CHECK_THROWS_AS(read_checkpoint(truncated), joma::io_error);
}

TEST_CASE("normalized correlation", "[model][ncorr]")
{
    num::Rng rng(12);
    const Eigen::Index n = 2000;
    RealMatrix lat(n, 3), act(n, 16);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) lat(i, j) = rng.bernoulli(0.3);
        for (Eigen::Index k = 0; k < 16; ++k) act(i, k) = rng.normal();
    }
    act.col(5) = lat.col(1);
    act.col(9).setConstant(2.0);
    const auto r = ncorr(act, lat, 0);
    REQUIRE(r.entries.size() == 3);
    CHECK_THAT(r.entries[1].ncorr, WithinAbs(1.0, 1e-12));
    CHECK(r.entries[1].best_neuron == 5);
    CHECK(r.entries[0].ncorr < 0.2);

    // latents unrelated to the activations: null level
    num::Rng prng(3);
    const auto null = ncorr_null(act, lat, 0, prng);
    CHECK(null.mean <= 0.2);

    RealMatrix constant = RealMatrix::Constant(n, 2, 1.0);
    for (const auto& e : ncorr(constant, lat, 0).entries) CHECK(e.ncorr == 0.0);

    std::ostringstream os;
    write_ncorr_csv(os, {r});
    CHECK(os.str().rfind("layer,latent_id,best_neuron,ncorr\n0,0,", 0) == 0);
}
