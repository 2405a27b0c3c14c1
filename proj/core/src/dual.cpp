#include "dpgcnn/dual.hpp"

#include <algorithm>
#include <string>

#include "dpgcnn/error.hpp"
#include "dpgcnn/rng.hpp"

namespace dpgcnn {

std::string_view to_string(DualMode mode) {
    switch (mode) {
        case DualMode::chain: return "chain";
        case DualMode::fan: return "fan";
        case DualMode::classic_line_graph: return "classic_line_graph";
    }
    return "chain";
}

DualMode dual_mode_from_string(std::string_view name) {
    if (name == "chain") return DualMode::chain;
    if (name == "fan") return DualMode::fan;
    if (name == "classic_line_graph" || name == "classic") return DualMode::classic_line_graph;
    fail(ErrorCode::invalid_config, "unknown dual mode '" + std::string(name) + "'");
}

namespace {

std::vector<arc_id> reverse_table(const DirectedGraph& g) {
    std::vector<arc_id> rev(g.arc_count(), no_arc);
    for (arc_id a = 0; a < g.arc_count(); ++a) {
        const Arc& arc = g.arc(a);
        if (auto r = g.find_arc(arc.dst, arc.src)) rev[a] = *r;
    }
    return rev;
}

// Merges two ascending id lists into `out`, dropping `self` and duplicates.
void merge_excluding(std::span<const std::uint32_t> lhs, std::span<const std::uint32_t> rhs,
                     std::uint32_t self, std::vector<std::uint32_t>& out, DualBuildStats* stats) {
    std::size_t i = 0;
    std::size_t j = 0;
    std::uint32_t last = no_arc;
    auto emit = [&](std::uint32_t id) {
        if (id != self && id != last) {
            out.push_back(id);
            last = id;
        }
    };
    while (i < lhs.size() || j < rhs.size()) {
        if (j == rhs.size() || (i < lhs.size() && lhs[i] <= rhs[j])) {
            emit(lhs[i++]);
        } else {
            emit(rhs[j++]);
        }
    }
    if (stats) stats->candidate_visits += lhs.size() + rhs.size();
}

void build_directed_modes(const DirectedGraph& g, DualMode mode, DualGraph& d, DualBuildStats* stats) {
    const std::size_t m = g.arc_count();
    d.offsets.assign(m + 1, 0);
    d.targets.clear();
    std::vector<std::uint32_t> out_ids;
    for (arc_id a = 0; a < m; ++a) {
        const Arc& arc = g.arc(a);
        // Chain: arcs into src, arcs out of dst. Fan: arcs out of src, arcs into dst.
        const vertex_id out_vertex = mode == DualMode::chain ? arc.dst : arc.src;
        const vertex_id in_vertex = mode == DualMode::chain ? arc.src : arc.dst;
        out_ids.resize(g.out_degree(out_vertex));
        for (std::size_t k = 0; k < out_ids.size(); ++k) {
            out_ids[k] = static_cast<std::uint32_t>(g.first_out_arc(out_vertex) + k);
        }
        merge_excluding(g.in_arcs(in_vertex), out_ids, a, d.targets, stats);
        d.offsets[a + 1] = static_cast<std::uint32_t>(d.targets.size());
    }
    d.vertex_arc.resize(m);
    d.arc_vertex.resize(m);
    for (arc_id a = 0; a < m; ++a) {
        d.vertex_arc[a] = a;
        d.arc_vertex[a] = a;
    }
}

void build_classic(const DirectedGraph& g, DualGraph& d, DualBuildStats* stats) {
    if (!g.is_bidirected() || g.has_self_loops()) {
        fail(ErrorCode::mode_requires_undirected,
             "classic line graph needs a bidirected primal without self-loops");
    }
    const std::size_t m = g.arc_count();
    d.arc_vertex.assign(m, no_arc);
    d.vertex_arc.clear();
    for (arc_id a = 0; a < m; ++a) {
        const Arc& arc = g.arc(a);
        if (arc.src < arc.dst) {
            d.arc_vertex[a] = static_cast<std::uint32_t>(d.vertex_arc.size());
            d.vertex_arc.push_back(a);
        }
    }
    for (arc_id a = 0; a < m; ++a) {
        if (d.arc_vertex[a] == no_arc) d.arc_vertex[a] = d.arc_vertex[d.reverse_arc[a]];
    }

    // Undirected edges incident to each vertex, as ascending dual ids.
    const std::size_t n = g.vertex_count();
    std::vector<std::vector<std::uint32_t>> incident(n);
    for (vertex_id v = 0; v < n; ++v) {
        const arc_id first = g.first_out_arc(v);
        for (std::size_t k = 0; k < g.out_degree(v); ++k) {
            incident[v].push_back(d.arc_vertex[first + k]);
        }
        std::sort(incident[v].begin(), incident[v].end());
    }

    const std::size_t nd = d.vertex_arc.size();
    d.offsets.assign(nd + 1, 0);
    d.targets.clear();
    for (std::uint32_t u = 0; u < nd; ++u) {
        const Arc& arc = g.arc(d.vertex_arc[u]);
        merge_excluding(incident[arc.src], incident[arc.dst], u, d.targets, stats);
        d.offsets[u + 1] = static_cast<std::uint32_t>(d.targets.size());
    }
}

}  // namespace

DualGraph build_dual(std::shared_ptr<const DirectedGraph> g, DualMode mode, DualBuildStats* stats) {
    DualGraph d;
    d.primal = std::move(g);
    d.mode = mode;
    d.reverse_arc = reverse_table(*d.primal);
    if (mode == DualMode::classic_line_graph) {
        build_classic(*d.primal, d, stats);
    } else {
        build_directed_modes(*d.primal, mode, d, stats);
    }
    return d;
}

DualEdgeCountReport count_report(const DualGraph& d) {
    const DirectedGraph& g = *d.primal;
    DualEdgeCountReport r;
    r.n = g.vertex_count();
    r.dual_vertex_count = d.vertex_count();
    r.dual_edge_count_actual = d.edge_count();
    if (d.mode == DualMode::classic_line_graph) {
        r.formula_kind = "undirected";
        r.primal_edge_count = g.undirected_edge_count();
        std::int64_t sum_sq = 0;
        for (vertex_id v = 0; v < g.vertex_count(); ++v) {
            const auto deg = static_cast<std::int64_t>(g.out_degree(v));
            sum_sq += deg * deg;
        }
        r.dual_edge_count_formula = sum_sq / 2 - static_cast<std::int64_t>(r.primal_edge_count);
    } else {
        r.formula_kind = "directed";
        r.primal_edge_count = g.arc_count();
        std::int64_t sum = 0;
        for (vertex_id v = 0; v < g.vertex_count(); ++v) {
            sum += static_cast<std::int64_t>(g.in_degree(v)) * static_cast<std::int64_t>(g.out_degree(v));
        }
        r.dual_edge_count_formula = sum - static_cast<std::int64_t>(r.primal_edge_count);
    }
    r.formulas_agree = r.dual_edge_count_formula == static_cast<std::int64_t>(r.dual_edge_count_actual);
    return r;
}

DualGraph sparsify_dual(const DualGraph& d, std::size_t k, std::uint64_t seed, SparsifyTrace* trace) {
    if (k < 1) fail(ErrorCode::invalid_config, "sparsify_dual needs k >= 1");
    Rng rng = Rng(seed).stream(streams::sparsify);
    const std::size_t nd = d.vertex_count();

    std::vector<std::pair<std::uint32_t, std::uint32_t>> kept_edges;
    if (trace) trace->kept.assign(nd, {});
    std::vector<std::uint32_t> pool;
    for (std::uint32_t u = 0; u < nd; ++u) {
        const auto nb = d.neighbors(u);
        pool.assign(nb.begin(), nb.end());
        const std::size_t take = std::min(k, pool.size());
        // Partial Fisher-Yates: the first `take` slots are a uniform sample.
        for (std::size_t i = 0; i < take && pool.size() > k; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(take);
        for (std::uint32_t v : pool) {
            kept_edges.emplace_back(u, v);
            kept_edges.emplace_back(v, u);
        }
        if (trace) trace->kept[u] = pool;
    }
    std::sort(kept_edges.begin(), kept_edges.end());
    kept_edges.erase(std::unique(kept_edges.begin(), kept_edges.end()), kept_edges.end());

    DualGraph out;
    out.primal = d.primal;
    out.mode = d.mode;
    out.vertex_arc = d.vertex_arc;
    out.arc_vertex = d.arc_vertex;
    out.reverse_arc = d.reverse_arc;
    out.sparsified_k = k;
    out.offsets.assign(nd + 1, 0);
    out.targets.reserve(kept_edges.size());
    for (const auto& [u, v] : kept_edges) {
        ++out.offsets[u + 1];
        out.targets.push_back(v);
    }
    for (std::size_t u = 0; u < nd; ++u) out.offsets[u + 1] += out.offsets[u];
    return out;
}

bool connected(const DualGraph& d) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(d.targets.size() / 2);
    for (std::uint32_t u = 0; u < d.vertex_count(); ++u) {
        for (std::uint32_t v : d.neighbors(u)) {
            if (u < v) pairs.emplace_back(u, v);
        }
    }
    return component_count(d.vertex_count(), pairs) <= 1;
}

}  // namespace dpgcnn
