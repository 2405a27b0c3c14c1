#include "dpgcnn/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dpgcnn/error.hpp"

namespace dpgcnn {

class GraphBuilder {
public:
    // `arcs` must be sorted and unique.
    static DirectedGraph build(std::vector<Arc> arcs, std::size_t n) {
        DirectedGraph g;
        g.n_ = n;
        g.arcs_ = std::move(arcs);
        const std::size_t m = g.arcs_.size();

        g.out_offsets_.assign(n + 1, 0);
        g.in_offsets_.assign(n + 1, 0);
        for (const Arc& a : g.arcs_) {
            ++g.out_offsets_[a.src + 1];
            ++g.in_offsets_[a.dst + 1];
            if (a.src == a.dst) g.self_loops_ = true;
        }
        std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());
        std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());

        g.out_targets_.resize(m);
        for (std::size_t i = 0; i < m; ++i) g.out_targets_[i] = g.arcs_[i].dst;

        // Scanning arcs in id order fills each in-list with ascending arc ids.
        g.in_sources_.resize(m);
        g.in_arcs_.resize(m);
        std::vector<std::uint32_t> cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
        for (std::size_t i = 0; i < m; ++i) {
            const Arc& a = g.arcs_[i];
            const std::uint32_t slot = cursor[a.dst]++;
            g.in_sources_[slot] = a.src;
            g.in_arcs_[slot] = static_cast<arc_id>(i);
        }

        g.bidirected_ = std::all_of(g.arcs_.begin(), g.arcs_.end(), [&](const Arc& a) {
            return g.find_arc(a.dst, a.src).has_value();
        });
        return g;
    }
};

std::optional<arc_id> DirectedGraph::find_arc(vertex_id src, vertex_id dst) const {
    if (src >= n_ || dst >= n_) return std::nullopt;
    const auto first = out_targets_.begin() + out_offsets_[src];
    const auto last = out_targets_.begin() + out_offsets_[src + 1];
    const auto it = std::lower_bound(first, last, dst);
    if (it == last || *it != dst) return std::nullopt;
    return static_cast<arc_id>(it - out_targets_.begin());
}

std::size_t DirectedGraph::undirected_edge_count() const {
    std::size_t count = 0;
    for (const Arc& a : arcs_) {
        if (a.src == a.dst) continue;
        if (a.src < a.dst || !find_arc(a.dst, a.src)) ++count;
    }
    return count;
}

DirectedGraph from_edge_list(std::span<const Arc> arcs, std::size_t n, bool dedupe) {
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (arcs[i].src >= n || arcs[i].dst >= n) {
            fail(ErrorCode::index_out_of_range,
                 "arc " + std::to_string(i) + " (" + std::to_string(arcs[i].src) + ", " +
                     std::to_string(arcs[i].dst) + ") with vertex count " + std::to_string(n));
        }
    }
    std::vector<Arc> sorted(arcs.begin(), arcs.end());
    std::sort(sorted.begin(), sorted.end());
    const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) {
        if (!dedupe) {
            fail(ErrorCode::duplicate_arc,
                 "(" + std::to_string(dup->src) + ", " + std::to_string(dup->dst) + ")");
        }
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    }
    return GraphBuilder::build(std::move(sorted), n);
}

DirectedGraph to_bidirected(const DirectedGraph& g) {
    std::vector<Arc> arcs;
    arcs.reserve(2 * g.arc_count());
    for (const Arc& a : g.arcs()) {
        arcs.push_back(a);
        if (a.src != a.dst) arcs.push_back({a.dst, a.src});
    }
    return from_edge_list(arcs, g.vertex_count(), true);
}

DirectedGraph add_self_loops(const DirectedGraph& g) {
    std::vector<Arc> arcs(g.arcs().begin(), g.arcs().end());
    for (vertex_id v = 0; v < g.vertex_count(); ++v) arcs.push_back({v, v});
    return from_edge_list(arcs, g.vertex_count(), true);
}

DirectedGraph remove_self_loops(const DirectedGraph& g) {
    std::vector<Arc> arcs;
    arcs.reserve(g.arc_count());
    for (const Arc& a : g.arcs()) {
        if (a.src != a.dst) arcs.push_back(a);
    }
    return GraphBuilder::build(std::move(arcs), g.vertex_count());
}

std::size_t component_count(std::size_t n,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs) {
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = n;
    for (const auto& [a, b] : pairs) {
        const auto ra = find(a);
        const auto rb = find(b);
        if (ra != rb) {
            parent[std::max(ra, rb)] = std::min(ra, rb);
            --components;
        }
    }
    return components;
}

bool connected(const DirectedGraph& g) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(g.arc_count());
    for (const Arc& a : g.arcs()) pairs.emplace_back(a.src, a.dst);
    return component_count(g.vertex_count(), pairs) <= 1;
}

DirectedGraph permute_vertices(const DirectedGraph& g, std::span<const vertex_id> perm) {
    if (perm.size() != g.vertex_count()) {
        fail(ErrorCode::shape_mismatch, "permutation length differs from vertex count");
    }
    std::vector<Arc> arcs;
    arcs.reserve(g.arc_count());
    for (const Arc& a : g.arcs()) arcs.push_back({perm[a.src], perm[a.dst]});
    return from_edge_list(arcs, g.vertex_count(), false);
}

}  // namespace dpgcnn
