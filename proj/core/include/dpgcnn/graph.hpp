#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dpgcnn {

using vertex_id = std::uint32_t;
using arc_id = std::uint32_t;

struct Arc {
    vertex_id src = 0;
    vertex_id dst = 0;

    friend bool operator==(const Arc&, const Arc&) = default;
    friend auto operator<=>(const Arc&, const Arc&) = default;
};

/// Directed graph in compressed sparse form.
///
/// Arcs are sorted lexicographically by (src, dst) and an arc's id is its
/// position in that order. The outgoing arcs of vertex v are therefore the
/// contiguous id range [out_offsets[v], out_offsets[v+1]). Incoming arcs are
/// indexed by a second CSR whose entries are arc ids, ascending per vertex.
class DirectedGraph {
public:
    DirectedGraph() = default;

    std::size_t vertex_count() const noexcept { return n_; }
    std::size_t arc_count() const noexcept { return arcs_.size(); }

    std::span<const Arc> arcs() const noexcept { return arcs_; }
    const Arc& arc(arc_id a) const { return arcs_[a]; }

    std::span<const std::uint32_t> out_offsets() const noexcept { return out_offsets_; }
    std::span<const vertex_id> out_targets() const noexcept { return out_targets_; }
    std::span<const std::uint32_t> in_offsets() const noexcept { return in_offsets_; }
    std::span<const vertex_id> in_sources() const noexcept { return in_sources_; }
    std::span<const arc_id> in_arc_ids() const noexcept { return in_arcs_; }

    std::size_t out_degree(vertex_id v) const { return out_offsets_[v + 1] - out_offsets_[v]; }
    std::size_t in_degree(vertex_id v) const { return in_offsets_[v + 1] - in_offsets_[v]; }

    /// First outgoing arc id of v; outgoing arcs are contiguous.
    arc_id first_out_arc(vertex_id v) const { return out_offsets_[v]; }
    /// Ids of arcs entering v, ascending.
    std::span<const arc_id> in_arcs(vertex_id v) const {
        return std::span<const arc_id>(in_arcs_).subspan(in_offsets_[v], in_degree(v));
    }
    std::span<const vertex_id> successors(vertex_id v) const {
        return std::span<const vertex_id>(out_targets_).subspan(out_offsets_[v], out_degree(v));
    }

    /// Arc id of (src, dst) if present.
    std::optional<arc_id> find_arc(vertex_id src, vertex_id dst) const;

    bool is_bidirected() const noexcept { return bidirected_; }
    bool has_self_loops() const noexcept { return self_loops_; }

    /// Number of undirected edges {i, j}, i != j, counting reciprocal arcs once.
    std::size_t undirected_edge_count() const;

    friend class GraphBuilder;

private:
    std::size_t n_ = 0;
    std::vector<Arc> arcs_;
    std::vector<std::uint32_t> out_offsets_;
    std::vector<vertex_id> out_targets_;
    std::vector<std::uint32_t> in_offsets_;
    std::vector<vertex_id> in_sources_;
    std::vector<arc_id> in_arcs_;
    bool bidirected_ = false;
    bool self_loops_ = false;
};

/// Builds a graph from an arc list. Throws IndexOutOfRange for ids >= n and,
/// when `dedupe` is false, DuplicateArc for repeated arcs.
DirectedGraph from_edge_list(std::span<const Arc> arcs, std::size_t n, bool dedupe = true);

DirectedGraph to_bidirected(const DirectedGraph& g);

DirectedGraph add_self_loops(const DirectedGraph& g);

DirectedGraph remove_self_loops(const DirectedGraph& g);

/// Weak connectivity: true iff the underlying undirected graph has a single
/// component. Graphs with at most one vertex are connected.
bool connected(const DirectedGraph& g);

/// Relabels vertices: vertex v becomes perm[v].
DirectedGraph permute_vertices(const DirectedGraph& g, std::span<const vertex_id> perm);

/// Union-find component count over `n` elements joined by `pairs`.
std::size_t component_count(std::size_t n, std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);

}  // namespace dpgcnn
