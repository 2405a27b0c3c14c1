#include <gtest/gtest.h>

#include <numeric>

#include "dpgcnn/error.hpp"
#include "dpgcnn/gradcheck.hpp"
#include "dpgcnn/layers.hpp"
#include "dpgcnn/synthetic.hpp"
#include "oracles/oracles.hpp"

using namespace dpgcnn;

namespace {

Tensor random(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

std::vector<Arc> arcs_of(const DirectedGraph& g) { return {g.arcs().begin(), g.arcs().end()}; }

/// Random digraph where every vertex has at least one incoming arc.
DirectedGraph looped_graph(std::size_t n, std::size_t arcs, Rng& rng) {
    return add_self_loops(random_digraph(n, arcs, rng));
}

/// Sums of attention coefficients per receiver.
std::vector<double> receiver_sums(const Tensor& alpha, const Neighborhoods& nb) {
    std::vector<double> s(nb.receiver_count, 0.0);
    for (std::size_t e = 0; e < nb.entry_count(); ++e) s[nb.receiver[e]] += alpha[e];
    return s;
}

}  // namespace

TEST(GatLayer, MatchesDenseOracle) {
    Rng rng(21);
    for (int t = 0; t < 5; ++t) {
        const DirectedGraph g = looped_graph(8, 20, rng);
        const Tensor x = random(8, 5, rng);
        GatLayer layer({5, 4, 2, HeadMerge::concat, Activation::elu}, rng, "gat");
        Tape tape;
        ForwardContext ctx;
        const Tensor out = layer.forward(tape, tape.constant(x), incoming_neighborhoods(g), ctx).value();
        ASSERT_EQ(out.cols(), 8u);
        for (std::size_t h = 0; h < 2; ++h) {
            const Tensor ref =
                oracle::gat_head(x, layer.heads[h].weight.value, layer.heads[h].attention.value, arcs_of(g), 8);
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out(i, h * 4 + c), ref(i, c), 1e-12);
        }
    }
}

TEST(GatLayer, AverageMergeAndEmptyNeighborhood) {
    Rng rng(22);
    const DirectedGraph g = looped_graph(6, 10, rng);
    GatLayer layer({3, 2, 3, HeadMerge::average, Activation::none}, rng, "gat");
    Tape tape;
    ForwardContext ctx;
    EXPECT_EQ(layer.forward(tape, tape.constant(random(6, 3, rng)), incoming_neighborhoods(g), ctx).cols(), 2u);

    const std::vector<Arc> arcs{{0, 1}};
    const DirectedGraph bare = from_edge_list(arcs, 2);
    try {
        layer.forward(tape, tape.constant(random(2, 3, rng)), incoming_neighborhoods(bare), ctx);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::empty_neighborhood);
    }
}

TEST(DualConvLayer, MatchesDenseOracle) {
    Rng rng(23);
    for (int t = 0; t < 5; ++t) {
        const DirectedGraph g = random_digraph(7, 18, rng);
        const DualGraph d = build_dual(g, DualMode::chain);
        const Tensor x = random(7, 3, rng);
        DualConvLayer layer({6, 4, 1, Activation::relu, DualAttention::learned}, rng, "dual");
        Tape tape;
        ForwardContext ctx;
        const Tensor out =
            layer.forward(tape, EdgeInput::endpoint_pair(tape.constant(x)), d, dual_neighborhoods(d), ctx).value();
        const Tensor ref = oracle::dual_head(x, layer.heads[0].weight.value, layer.heads[0].attention.value,
                                             arcs_of(g), oracle::chain_dual(arcs_of(g)));
        EXPECT_LT(max_abs_diff(out, ref), 1e-12);
    }
}

TEST(DualConvLayer, UniformAttentionOnEqualFeatures) {
    Rng rng(24);
    const DirectedGraph g = to_bidirected(random_connected_bidirected(6, 4, rng));
    const DualGraph d = build_dual(g, DualMode::chain);
    const Neighborhoods nb = dual_neighborhoods(d);
    DualConvLayer layer({4, 3, 1, Activation::relu, DualAttention::learned}, rng, "dual");
    Tape tape;
    ForwardContext ctx;
    layer.forward(tape, EdgeInput::endpoint_pair(tape.constant(Tensor(6, 2, 0.5))), d, nb, ctx);
    const Tensor& alpha = layer.last_attention[0].value();
    for (std::size_t e = 0; e < nb.entry_count(); ++e) {
        EXPECT_NEAR(alpha[e], 1.0 / static_cast<double>(d.degree(nb.receiver[e])), 1e-12);
    }
}

TEST(DualConvLayer, FactoredTransformEqualsMaterialized) {
    Rng rng(25);
    const DirectedGraph g = random_digraph(9, 25, rng);
    const DualGraph d = build_dual(g, DualMode::chain);
    Tape tape;
    const Var x = tape.constant(random(9, 3, rng));
    const Var e = tape.constant(random(g.arc_count(), 2, rng));
    EdgeInput in;
    in.blocks = {{EdgeBlock::Kind::edge, e}, {EdgeBlock::Kind::source, x}, {EdgeBlock::Kind::target, x}};
    const Var w = tape.constant(random(8, 4, rng));
    const Tensor fast = edge_transform(tape, w, in, d).value();
    const Tensor slow = oracle::matmul(materialize(in, d).value(), w.value());
    EXPECT_LT(max_abs_diff(fast, slow), 1e-13);
}

TEST(PrimalConvLayer, MatchesDenseOracle) {
    Rng rng(26);
    const DirectedGraph g = looped_graph(6, 14, rng);
    const Tensor x = random(6, 4, rng);
    const Tensor f = random(g.arc_count(), 5, rng);
    PrimalConvLayer layer({4, 3, 1, 5, HeadMerge::concat, Activation::elu, false}, rng, "primal");
    Tape tape;
    ForwardContext ctx;
    const Tensor out =
        layer.forward(tape, tape.constant(x), tape.constant(f), incoming_neighborhoods(g), ctx).value();
    const Tensor ref =
        oracle::primal_head(x, layer.heads[0].weight.value, layer.heads[0].attention.value, f, arcs_of(g), 6);
    EXPECT_LT(max_abs_diff(out, ref), 1e-12);
}

TEST(PrimalConvLayer, SelfLoopOnlyGivesOwnTransform) {
    Rng rng(27);
    const std::vector<Arc> loops{{0, 0}, {1, 1}};
    const DirectedGraph g = from_edge_list(loops, 2);
    const Tensor x = random(2, 3, rng);
    PrimalConvLayer layer({3, 2, 1, 4, HeadMerge::concat, Activation::elu, false}, rng, "primal");
    Tape tape;
    ForwardContext ctx;
    const Tensor out =
        layer.forward(tape, tape.constant(x), tape.constant(random(2, 4, rng)), incoming_neighborhoods(g), ctx).value();
    const Tensor h = oracle::matmul(x, layer.heads[0].weight.value);
    for (std::size_t k = 0; k < h.size(); ++k) EXPECT_NEAR(out[k], oracle::elu(h[k]), 1e-14);
}

TEST(PolyConvLayer, MatchesDiffusionOracle) {
    Rng rng(28);
    const DirectedGraph g = looped_graph(7, 16, rng);
    const std::vector<Arc> arcs = arcs_of(g);
    const Tensor x = random(7, 4, rng);
    for (std::size_t order : {1u, 3u}) {
        PolyConvLayer layer({4, 3, order, Activation::elu, PolyScorer::pair, 0}, rng, "poly");
        Tape tape;
        ForwardContext ctx;
        const Tensor out = layer.forward(tape, tape.constant(x), incoming_neighborhoods(g), ctx).value();

        std::vector<std::vector<double>> alpha;
        for (std::size_t k = 1; k <= order; ++k) {
            const Tensor h = oracle::matmul(x, layer.theta[k].value);
            std::vector<double> logits;
            for (const Arc& a : arcs) {
                logits.push_back(oracle::leaky(oracle::dot_row(h, a.dst, layer.attention[k - 1].value, 0) +
                                               oracle::dot_row(h, a.src, layer.attention[k - 1].value, 3)));
            }
            alpha.push_back(oracle::softmax_by_receiver(logits, arcs, 7));
        }
        // T_l = A_l ... A_1 x, summed through Theta_l.
        Tensor t = x;
        Tensor acc = oracle::matmul(x, layer.theta[0].value);
        for (std::size_t l = 1; l <= order; ++l) {
            t = oracle::diffuse(t, alpha[l - 1], arcs, 7);
            const Tensor z = oracle::matmul(t, layer.theta[l].value);
            for (std::size_t k = 0; k < z.size(); ++k) acc[k] += z[k];
        }
        for (double& v : acc.values()) v = oracle::elu(v);
        EXPECT_LT(max_abs_diff(out, acc), 1e-12) << "order " << order;
    }
}

TEST(Attention, NormalizedPerNeighborhood) {
    Rng rng(29);
    const DirectedGraph g = add_self_loops(random_undirected(12, 30, rng));
    const DualGraph d = build_dual(g, DualMode::chain);
    const Neighborhoods pnb = incoming_neighborhoods(g, &d);
    const Neighborhoods dnb = dual_neighborhoods(d);
    Tape tape;
    ForwardContext ctx;
    const Var x = tape.constant(random(12, 5, rng));
    GatLayer gat({5, 4, 2, HeadMerge::concat, Activation::elu}, rng, "gat");
    gat.forward(tape, x, pnb, ctx);
    DualConvLayer dual({10, 6, 2, Activation::relu, DualAttention::learned}, rng, "dual");
    const Var e = dual.forward(tape, EdgeInput::endpoint_pair(x), d, dnb, ctx);
    PrimalConvLayer primal({5, 4, 2, 12, HeadMerge::concat, Activation::elu, false}, rng, "primal");
    primal.forward(tape, x, e, pnb, ctx);
    for (const Var& a : gat.last_attention)
        for (double s : receiver_sums(a.value(), pnb)) EXPECT_NEAR(s, 1.0, 1e-12);
    for (const Var& a : primal.last_attention)
        for (double s : receiver_sums(a.value(), pnb)) EXPECT_NEAR(s, 1.0, 1e-12);
    for (const Var& a : dual.last_attention) {
        const auto sums = receiver_sums(a.value(), dnb);
        for (std::uint32_t u = 0; u < d.vertex_count(); ++u) {
            if (d.degree(u) > 0) EXPECT_NEAR(sums[u], 1.0, 1e-12);
        }
    }
}

TEST(GatReduction, IdentityDualAttentionEqualsGat) {
    Rng rng(30);
    for (int t = 0; t < 5; ++t) {
        const DirectedGraph g = add_self_loops(random_undirected(10, 20, rng));
        const DualGraph d = build_dual(g, DualMode::chain);
        GatLayer gat({4, 3, 2, HeadMerge::concat, Activation::elu}, rng, "gat");
        InducedDualPrimal induced = induce_from_gat(gat);
        Tape tape;
        ForwardContext ctx;
        const Var x = tape.constant(random(10, 4, rng));
        const Neighborhoods pnb = incoming_neighborhoods(g, &d);
        const Tensor a = gat.forward(tape, x, pnb, ctx).value();
        const Tensor b =
            gat_reduction(tape, x, induced.dual, induced.primal, d, dual_neighborhoods(d), pnb, ctx).value();
        EXPECT_LT(max_abs_diff(a, b), 1e-10);
    }
}

TEST(Equivariance, LayersCommuteWithRelabeling) {
    Rng rng(31);
    const std::size_t n = 9;
    const DirectedGraph g = add_self_loops(random_undirected(n, 18, rng));
    std::vector<vertex_id> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(std::span<vertex_id>(perm));
    const DirectedGraph pg = permute_vertices(g, perm);
    const Tensor x = random(n, 4, rng);
    Tensor px(n, 4);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t c = 0; c < 4; ++c) px(perm[v], c) = x(v, c);

    GatLayer gat({4, 3, 2, HeadMerge::concat, Activation::elu}, rng, "gat");
    DualConvLayer dual({8, 5, 1, Activation::relu, DualAttention::learned}, rng, "dual");
    PrimalConvLayer primal({4, 3, 1, 5, HeadMerge::concat, Activation::elu, false}, rng, "primal");
    PolyConvLayer poly({4, 3, 2, Activation::elu, PolyScorer::pair, 0}, rng, "poly");

    auto run = [&](const DirectedGraph& graph, const Tensor& feats) {
        const DualGraph d = build_dual(graph, DualMode::chain);
        const Neighborhoods pnb = incoming_neighborhoods(graph, &d);
        Tape tape;
        ForwardContext ctx;
        const Var xv = tape.constant(feats);
        std::vector<Tensor> outs;
        outs.push_back(gat.forward(tape, xv, pnb, ctx).value());
        const Var e = dual.forward(tape, EdgeInput::endpoint_pair(xv), d, dual_neighborhoods(d), ctx);
        outs.push_back(e.value());
        outs.push_back(primal.forward(tape, xv, e, pnb, ctx).value());
        outs.push_back(poly.forward(tape, xv, pnb, ctx).value());
        return outs;
    };
    const auto base = run(g, x);
    const auto moved = run(pg, px);
    for (std::size_t k : {0u, 2u, 3u}) {
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t c = 0; c < base[k].cols(); ++c)
                EXPECT_NEAR(moved[k](perm[v], c), base[k](v, c), 1e-12) << "output " << k;
    }
    for (arc_id a = 0; a < g.arc_count(); ++a) {
        const Arc arc = g.arc(a);
        const arc_id b = *pg.find_arc(perm[arc.src], perm[arc.dst]);
        for (std::size_t c = 0; c < base[1].cols(); ++c) EXPECT_NEAR(moved[1](b, c), base[1](a, c), 1e-12);
    }
}

TEST(Figure2, DualDistinguishesArcsGatCannot) {
    // 0 - 1, 1 - 2, 1 - 3, 2 - 4: vertices 2 and 3 share features, only 2 has
    // a further neighbor.
    const std::vector<Arc> edges{{0, 1}, {1, 2}, {1, 3}, {2, 4}};
    const DirectedGraph g = to_bidirected(from_edge_list(edges, 5));
    const DualGraph d = build_dual(g, DualMode::chain);
    const arc_id a21 = *g.find_arc(2, 1);
    const arc_id a31 = *g.find_arc(3, 1);
    const Neighborhoods pnb = incoming_neighborhoods(g, &d);
    std::size_t e21 = 0;
    std::size_t e31 = 0;
    for (std::size_t e = 0; e < pnb.entry_count(); ++e) {
        if (pnb.edge_row[e] == d.arc_vertex[a21]) e21 = e;
        if (pnb.edge_row[e] == d.arc_vertex[a31]) e31 = e;
    }
    Rng rng(32);
    int distinguished = 0;
    for (int draw = 0; draw < 20; ++draw) {
        Tensor x = random(5, 3, rng);
        for (std::size_t c = 0; c < 3; ++c) x(3, c) = x(2, c);
        Tape tape;
        ForwardContext ctx;
        const Var xv = tape.constant(x);
        GatLayer gat({3, 4, 1, HeadMerge::concat, Activation::elu}, rng, "gat");
        gat.forward(tape, xv, pnb, ctx);
        const Tensor& alpha = gat.last_attention[0].value();
        EXPECT_EQ(alpha[e21], alpha[e31]);

        DualConvLayer dual({6, 4, 1, Activation::none, DualAttention::learned}, rng, "dual");
        const Tensor f = dual.forward(tape, EdgeInput::endpoint_pair(xv), d, dual_neighborhoods(d), ctx).value();
        double diff = 0.0;
        for (std::size_t c = 0; c < 4; ++c) diff = std::max(diff, std::abs(f(a21, c) - f(a31, c)));
        if (diff > 1e-8) ++distinguished;
    }
    EXPECT_EQ(distinguished, 20);
}

TEST(GradCheck, LayersPass) {
    const GradCheckReport r = gradcheck_layers(3, 5);
    for (const auto& res : r.results) EXPECT_TRUE(res.passed()) << res.name << " " << res.max_rel_error;
    EXPECT_FALSE(gradcheck_layers(2, 5, true).passed());
}
