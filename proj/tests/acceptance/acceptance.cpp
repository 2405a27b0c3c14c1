// Acceptance report: one PASS/FAIL line per criterion.
//
//   dpgcnn_acceptance            run everything
//   dpgcnn_acceptance 2 5 12     run the listed criteria only
//
// Criteria 8-10 need the CORA and Citeseer files under $DPGCNN_DATA_DIR
// (<root>/cora/cora.{content,cites}, cora_split.json; same for citeseer).
// Criterion 11 uses directed CORA when present and a generated citation
// graph otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "dpgcnn/datasets.hpp"
#include "dpgcnn/dual.hpp"
#include "dpgcnn/gradcheck.hpp"
#include "dpgcnn/layers.hpp"
#include "dpgcnn/model.hpp"
#include "dpgcnn/synthetic.hpp"
#include "dpgcnn/trainer.hpp"
#include "oracles/oracles.hpp"

using namespace dpgcnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
    return buf;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Tensor random(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

std::vector<Arc> arcs_of(const DirectedGraph& g) { return {g.arcs().begin(), g.arcs().end()}; }

std::set<oracle::Edge> edges_of(const DualGraph& d) {
    std::set<oracle::Edge> out;
    for (std::uint32_t u = 0; u < d.vertex_count(); ++u)
        for (std::uint32_t v : d.neighbors(u))
            if (u < v) out.insert({u, v});
    return out;
}

std::vector<std::uint64_t> seeds(std::size_t n) {
    std::vector<std::uint64_t> s(n);
    std::iota(s.begin(), s.end(), 0u);
    return s;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
    GradCheckReport all;
    for (auto suite : {gradcheck_ops, gradcheck_layers, gradcheck_model}) {
        const GradCheckReport r = suite(100, 1, false);
        all.results.insert(all.results.end(), r.results.begin(), r.results.end());
    }
    const GradCheckResult worst = all.worst(1).front();
    return {all.passed(), std::to_string(all.results.size()) + " checks x 100 cases, worst " + worst.name + " " +
                              num(worst.max_rel_error) + " (threshold " + num(worst.threshold) + ")"};
}

Outcome dual_oracle() {
    Rng rng(2);
    std::size_t mismatches = 0;
    std::size_t max_arcs = 0;
    for (int t = 0; t < 50; ++t) {
        const DirectedGraph g = random_digraph(5 + rng.below(40), 1 + rng.below(200), rng);
        max_arcs = std::max(max_arcs, g.arc_count());
        if (edges_of(build_dual(g, DualMode::chain)) != oracle::chain_dual(arcs_of(g))) ++mismatches;
        if (edges_of(build_dual(g, DualMode::fan)) != oracle::fan_dual(arcs_of(g))) ++mismatches;
    }
    return {mismatches == 0, "50 digraphs (up to " + std::to_string(max_arcs) + " arcs), chain+fan mismatches " +
                                 std::to_string(mismatches)};
}

Outcome undirected_formula() {
    Rng rng(3);
    std::size_t mismatches = 0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 3 + rng.below(40);
        const DirectedGraph g = random_undirected(n, 1 + rng.below(150), rng);
        std::vector<std::int64_t> degree(n, 0);
        std::vector<oracle::Edge> edges;
        for (const Arc& a : g.arcs()) {
            if (a.src < a.dst) {
                edges.push_back({a.src, a.dst});
                ++degree[a.src];
                ++degree[a.dst];
            }
        }
        std::int64_t sq = 0;
        for (std::int64_t d : degree) sq += d * d;
        const std::int64_t formula = sq / 2 - static_cast<std::int64_t>(edges.size());
        const DualGraph d = build_dual(g, DualMode::classic_line_graph);
        const auto actual = static_cast<std::int64_t>(d.edge_count());
        if (actual != formula || static_cast<std::int64_t>(oracle::line_graph_edges(edges)) != formula ||
            !count_report(d).formulas_agree) {
            ++mismatches;
        }
    }
    return {mismatches == 0, "50 undirected graphs, mismatches " + std::to_string(mismatches)};
}

bool dual_connected_bfs(const DualGraph& d) {
    if (d.vertex_count() == 0) return true;
    std::vector<bool> seen(d.vertex_count(), false);
    std::deque<std::uint32_t> queue{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!queue.empty()) {
        const std::uint32_t u = queue.front();
        queue.pop_front();
        for (std::uint32_t v : d.neighbors(u)) {
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                queue.push_back(v);
            }
        }
    }
    return count == d.vertex_count();
}

Outcome connectivity() {
    Rng rng(4);
    std::size_t disconnected = 0;
    for (int t = 0; t < 100; ++t) {
        const DirectedGraph g = random_connected_bidirected(2 + rng.below(60), rng.below(40), rng);
        if (!dual_connected_bfs(build_dual(g, DualMode::chain))) ++disconnected;
    }
    return {disconnected == 0, "100 connected bidirected graphs, disconnected duals " + std::to_string(disconnected)};
}

Outcome gat_reduction_check() {
    Rng rng(5);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 5 + rng.below(20);
        const DirectedGraph g = add_self_loops(random_undirected(n, n + rng.below(3 * n), rng));
        const DualGraph d = build_dual(g, DualMode::chain);
        const std::size_t q = 1 + rng.below(6);
        GatLayer gat({q, 1 + rng.below(5), 1 + rng.below(3), HeadMerge::concat, Activation::elu}, rng, "gat");
        InducedDualPrimal induced = induce_from_gat(gat);
        Tape tape;
        ForwardContext ctx;
        const Var x = tape.constant(random(n, q, rng));
        const Neighborhoods pnb = incoming_neighborhoods(g, &d);
        const Tensor a = gat.forward(tape, x, pnb, ctx).value();
        const Tensor b =
            gat_reduction(tape, x, induced.dual, induced.primal, d, dual_neighborhoods(d), pnb, ctx).value();
        worst = std::max(worst, max_abs_diff(a, b));
    }
    return {worst <= 1e-10, "20 instances, max |GAT - reduced DPGCNN| " + num(worst)};
}

double worst_normalization(const Tensor& alpha, const Neighborhoods& nb) {
    std::vector<double> s(nb.receiver_count, 0.0);
    std::vector<bool> any(nb.receiver_count, false);
    for (std::size_t e = 0; e < nb.entry_count(); ++e) {
        s[nb.receiver[e]] += alpha[e];
        any[nb.receiver[e]] = true;
    }
    double worst = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r)
        if (any[r]) worst = std::max(worst, std::abs(s[r] - 1.0));
    return worst;
}

Outcome normalization_and_equivariance() {
    Rng rng(6);
    double norm_err = 0.0;
    double perm_err = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 6 + rng.below(15);
        const DirectedGraph g = add_self_loops(random_undirected(n, 2 * n, rng));
        const std::size_t q = 2 + rng.below(4);
        const Tensor x = random(n, q, rng);
        std::vector<vertex_id> perm(n);
        std::iota(perm.begin(), perm.end(), 0u);
        rng.shuffle(std::span<vertex_id>(perm));
        Tensor px(n, q);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t c = 0; c < q; ++c) px(perm[v], c) = x(v, c);
        const DirectedGraph pg = permute_vertices(g, perm);

        GatLayer gat({q, 3, 2, HeadMerge::concat, Activation::elu}, rng, "gat");
        DualConvLayer dual({2 * q, 4, 2, Activation::relu, DualAttention::learned}, rng, "dual");
        PrimalConvLayer primal({q, 3, 2, 8, HeadMerge::concat, Activation::elu, false}, rng, "primal");
        PolyConvLayer poly({q, 3, 2, Activation::elu, PolyScorer::pair, 0}, rng, "poly");

        auto run = [&](const DirectedGraph& graph, const Tensor& feats, bool check_norm) {
            const DualGraph d = build_dual(graph, DualMode::chain);
            const Neighborhoods pnb = incoming_neighborhoods(graph, &d);
            const Neighborhoods dnb = dual_neighborhoods(d);
            Tape tape;
            ForwardContext ctx;
            const Var xv = tape.constant(feats);
            std::vector<Tensor> outs;
            outs.push_back(gat.forward(tape, xv, pnb, ctx).value());
            const Var e = dual.forward(tape, EdgeInput::endpoint_pair(xv), d, dnb, ctx);
            outs.push_back(primal.forward(tape, xv, e, pnb, ctx).value());
            outs.push_back(poly.forward(tape, xv, pnb, ctx).value());
            if (check_norm) {
                for (const Var& a : gat.last_attention) norm_err = std::max(norm_err, worst_normalization(a.value(), pnb));
                for (const Var& a : primal.last_attention)
                    norm_err = std::max(norm_err, worst_normalization(a.value(), pnb));
                for (const Var& a : poly.last_attention) norm_err = std::max(norm_err, worst_normalization(a.value(), pnb));
                for (const Var& a : dual.last_attention) norm_err = std::max(norm_err, worst_normalization(a.value(), dnb));
            }
            return outs;
        };
        const auto base = run(g, x, true);
        const auto moved = run(pg, px, false);
        for (std::size_t k = 0; k < base.size(); ++k)
            for (std::size_t v = 0; v < n; ++v)
                for (std::size_t c = 0; c < base[k].cols(); ++c)
                    perm_err = std::max(perm_err, std::abs(moved[k](perm[v], c) - base[k](v, c)));
    }
    return {norm_err <= 1e-12 && perm_err <= 1e-12,
            "20 instances, max |sum alpha - 1| " + num(norm_err) + ", max permutation error " + num(perm_err)};
}

Outcome figure2() {
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
    Rng rng(7);
    int gat_equal = 0;
    int dual_distinct = 0;
    const int draws = 20;
    for (int draw = 0; draw < draws; ++draw) {
        Tensor x = random(5, 4, rng);
        for (std::size_t c = 0; c < 4; ++c) x(3, c) = x(2, c);
        Tape tape;
        ForwardContext ctx;
        const Var xv = tape.constant(x);
        GatLayer gat({4, 4, 1, HeadMerge::concat, Activation::elu}, rng, "gat");
        gat.forward(tape, xv, pnb, ctx);
        if (gat.last_attention[0].value()[e21] == gat.last_attention[0].value()[e31]) ++gat_equal;
        // Measure-zero coincidences are redrawn once.
        for (int attempt = 0; attempt < 2; ++attempt) {
            DualConvLayer dual({8, 4, 1, Activation::none, DualAttention::learned}, rng, "dual");
            const Tensor f = dual.forward(tape, EdgeInput::endpoint_pair(xv), d, dual_neighborhoods(d), ctx).value();
            double diff = 0.0;
            for (std::size_t c = 0; c < 4; ++c) diff = std::max(diff, std::abs(f(a21, c) - f(a31, c)));
            if (diff > 1e-8) {
                ++dual_distinct;
                break;
            }
        }
    }
    return {gat_equal == draws && dual_distinct == draws,
            "GAT alpha_12 == alpha_13 in " + std::to_string(gat_equal) + "/" + std::to_string(draws) +
                ", dual features differ in " + std::to_string(dual_distinct) + "/" + std::to_string(draws)};
}

// ---------------------------------------------------------------------------
// Dataset-backed reproductions

std::optional<CitationDataset> try_load(const std::string& name, fs::path* dir) {
    const fs::path d = data_root() / name;
    if (!fs::exists(d / (name + ".content")) || !fs::exists(d / (name + ".cites"))) return std::nullopt;
    if (dir) *dir = d;
    return load_citation_dataset(d, name);
}

std::string missing(const std::string& name) {
    return "dataset not found: expected " + (data_root() / name / (name + ".content")).string() +
           " (set DPGCNN_DATA_DIR)";
}

double sweep_mean(const ModelSpec& spec, const VertexProblem& p, std::size_t n) {
    const TrainConfig c = TrainConfig::vertex_defaults();
    return run_sweep(seeds(n), [&](std::uint64_t s) { return train_vertex(c, spec, p, s); }).mean_test_acc;
}

std::optional<VertexProblem> planetoid_problem(const std::string& name, std::string* why) {
    fs::path dir;
    const auto data = try_load(name, &dir);
    if (!data) {
        *why = missing(name);
        return std::nullopt;
    }
    const fs::path split = dir / (name + "_split.json");
    if (!fs::exists(split)) {
        *why = "split file not found: " + split.string();
        return std::nullopt;
    }
    return make_vertex_problem(*data, load_split(split, data->content));
}

Outcome cora_vertex() {
    std::string why;
    const auto p = planetoid_problem("cora", &why);
    if (!p) return {false, why};
    const double gat = sweep_mean(gat_vertex_spec(p->classes), *p, 10);
    const double dp = sweep_mean(dpgcnn_vertex_spec(p->classes), *p, 10);
    return {gat >= 0.81 && dp >= 0.82 && dp >= gat - 0.003,
            "GAT " + pct(gat) + " (need >= 81%), DPGCNN " + pct(dp) + " (need >= 82% and >= GAT - 0.3%)"};
}

Outcome citeseer_vertex() {
    std::string why;
    const auto p = planetoid_problem("citeseer", &why);
    if (!p) return {false, why};
    const double dp = sweep_mean(dpgcnn_vertex_spec(p->classes), *p, 10);
    return {dp >= 0.70, "DPGCNN " + pct(dp) + " (need >= 70%)"};
}

Outcome polynomial() {
    const auto data = try_load("cora", nullptr);
    if (!data) return {false, missing("cora")};
    const TrainConfig c = TrainConfig::vertex_defaults();
    auto mean_for = [&](std::size_t order) {
        const ModelSpec spec = poly_vertex_spec(data->content.class_count(), order, true);
        return run_sweep(seeds(5), [&](std::uint64_t s) {
                   const Split split = sample_split(data->content, {500, 500, 1000, false}, s);
                   return train_vertex(c, spec, make_vertex_problem(*data, split), s);
               }).mean_test_acc;
    };
    const double p1 = mean_for(1);
    const double p6 = mean_for(6);
    return {p1 >= 0.87 && p1 >= p6 - 0.005,
            "p=1 " + pct(p1) + " (need >= 87%), p=6 " + pct(p6) + " (need p1 >= p6 - 0.5%)"};
}

Outcome link_direction() {
    std::optional<CitationDataset> data = try_load("cora", nullptr);
    std::string source = "CORA citation digraph";
    if (!data) {
        data = citation_like_graph({}, 0);
        source = "generated citation graph (" + std::to_string(data->graph.vertex_count()) + " papers, " +
                 std::to_string(data->graph.arc_count()) + " citations)";
    }
    const TrainConfig c = TrainConfig::link_defaults();
    auto mean_for = [&](LinkVariant v) {
        const ModelSpec spec = link_spec(v);
        return run_sweep(seeds(10), [&](std::uint64_t s) {
                   return train_link(c, spec, make_link_problem(*data, s), s);
               }).mean_test_acc;
    };
    const double primal = mean_for(LinkVariant::primal_gat);
    const double dp = mean_for(LinkVariant::dpgcnn);
    return {dp > primal, source + ": DPGCNN " + pct(dp) + " vs Primal-GAT " + pct(primal) + " (need strictly greater)"};
}

Outcome parameter_parity() {
    // Feature width of the directed CORA subset used for link prediction.
    const std::size_t in = 8710;
    const std::size_t primal = count_params(link_spec(LinkVariant::primal_gat), in, 2);
    const std::size_t dp = count_params(link_spec(LinkVariant::dpgcnn), in, 2);
    const double ratio = static_cast<double>(dp) / static_cast<double>(primal);
    return {ratio <= 1.05, "DPGCNN " + std::to_string(dp) + " vs Primal-GAT " + std::to_string(primal) +
                               " parameters, ratio " + num(ratio) + " (need <= 1.05)"};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "gradient suite", gradient_suite},
        {2, "dual construction oracle", dual_oracle},
        {3, "undirected edge-count formula", undirected_formula},
        {4, "dual connectivity", connectivity},
        {5, "GAT reduction", gat_reduction_check},
        {6, "attention normalization and permutation equivariance", normalization_and_equivariance},
        {7, "edge discrimination (f_2 = f_3)", figure2},
        {8, "CORA vertex classification", cora_vertex},
        {9, "Citeseer vertex classification", citeseer_vertex},
        {10, "polynomial filters on CORA-500", polynomial},
        {11, "link direction", link_direction},
        {12, "link parameter parity", parameter_parity},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char head[64];
        std::snprintf(head, sizeof head, "%s %2d ", o.pass ? "PASS" : "FAIL", c.id);
        std::cout << head << c.name << ": " << o.detail << " [" << num(s) << " s]" << std::endl;
        if (!o.pass) ++failures;
    }
    std::cout << "report complete: " << failures << " failed" << std::endl;
    return failures == 0 ? 0 : 1;
}
