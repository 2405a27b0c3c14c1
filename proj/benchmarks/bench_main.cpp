#include <benchmark/benchmark.h>

#include "dpgcnn/dual.hpp"
#include "dpgcnn/layers.hpp"
#include "dpgcnn/model.hpp"
#include "dpgcnn/synthetic.hpp"
#include "dpgcnn/trainer.hpp"

using namespace dpgcnn;

namespace {

Tensor random(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

/// Roughly CORA-sized: 2708 vertices, about 5300 undirected edges.
const DirectedGraph& cora_like() {
    static const DirectedGraph g = [] {
        Rng rng(1);
        return random_undirected(2708, 5300, rng);
    }();
    return g;
}

void BM_BuildDual(benchmark::State& state) {
    const auto mode = static_cast<DualMode>(state.range(0));
    const DirectedGraph& g = cora_like();
    for (auto _ : state) benchmark::DoNotOptimize(build_dual(g, mode));
    state.SetLabel(std::string(to_string(mode)));
}
BENCHMARK(BM_BuildDual)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_SegmentSoftmax(benchmark::State& state) {
    const DirectedGraph g = add_self_loops(cora_like());
    const Neighborhoods nb = incoming_neighborhoods(g);
    Rng rng(2);
    const Tensor logits = random(nb.entry_count(), 1, rng);
    for (auto _ : state) {
        Tape tape;
        benchmark::DoNotOptimize(segment_softmax(tape.constant(logits), nb.receiver, nb.receiver_count));
    }
}
BENCHMARK(BM_SegmentSoftmax)->Unit(benchmark::kMicrosecond);

void BM_GatLayer(benchmark::State& state) {
    const DirectedGraph g = add_self_loops(cora_like());
    const Neighborhoods nb = incoming_neighborhoods(g);
    Rng rng(3);
    const Tensor x = random(g.vertex_count(), 64, rng);
    GatLayer layer({64, 8, 8, HeadMerge::concat, Activation::elu}, rng, "gat");
    for (auto _ : state) {
        Tape tape;
        ForwardContext ctx;
        Var out = layer.forward(tape, tape.constant(x), nb, ctx);
        tape.backward(sum(out));
    }
}
BENCHMARK(BM_GatLayer)->Unit(benchmark::kMillisecond);

void BM_DualPrimalLayer(benchmark::State& state) {
    const DirectedGraph g = add_self_loops(cora_like());
    const DualGraph d = build_dual(g, DualMode::chain);
    const Neighborhoods pnb = incoming_neighborhoods(g, &d);
    const Neighborhoods dnb = dual_neighborhoods(d);
    Rng rng(4);
    const Tensor x = random(g.vertex_count(), 16, rng);
    DualConvLayer dual({32, 16, 1, Activation::relu, DualAttention::learned}, rng, "dual");
    PrimalConvLayer primal({16, 8, 1, 16, HeadMerge::concat, Activation::elu, false}, rng, "primal");
    for (auto _ : state) {
        Tape tape;
        ForwardContext ctx;
        Var out = dual_primal_forward(tape, tape.constant(x), dual, primal, d, dnb, pnb, ctx);
        tape.backward(sum(out));
    }
    state.counters["dual_edges"] = static_cast<double>(d.edge_count());
}
BENCHMARK(BM_DualPrimalLayer)->Unit(benchmark::kMillisecond);

void BM_VertexEpoch(benchmark::State& state) {
    SyntheticVertexData s = two_cluster_graph(40, 5);
    CitationDataset data;
    data.content = std::move(s.content);
    data.graph = std::move(s.graph);
    const VertexProblem p = make_vertex_problem(data, s.split, false);
    TrainConfig c = TrainConfig::vertex_defaults();
    c.max_epochs = 1;
    c.patience = 1;
    const ModelSpec spec = state.range(0) == 0 ? gat_vertex_spec(2) : dpgcnn_vertex_spec(2);
    for (auto _ : state) benchmark::DoNotOptimize(train_vertex(c, spec, p, 1));
    state.SetLabel(state.range(0) == 0 ? "gat" : "dpgcnn");
}
BENCHMARK(BM_VertexEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
