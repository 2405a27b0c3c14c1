#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dpgcnn/graph.hpp"

namespace dpgcnn {

/// How arcs are joined in the dual graph.
///  - chain: (i,j) ~ every arc entering i and every arc leaving j.
///  - fan:   (i,j) ~ every arc (i,r), r != j, and every arc (t,j), t != i.
///  - classic_line_graph: one dual vertex per undirected edge; two are
///    adjacent iff the edges share an endpoint.
enum class DualMode { chain, fan, classic_line_graph };

std::string_view to_string(DualMode mode);
DualMode dual_mode_from_string(std::string_view name);

inline constexpr std::uint32_t no_arc = 0xFFFFFFFFu;

/// Undirected dual adjacency in CSR form. Neighbor lists are sorted,
/// symmetric, and free of self-loops.
struct DualGraph {
    std::shared_ptr<const DirectedGraph> primal;
    DualMode mode = DualMode::chain;
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> targets;
    /// Primal arc represented by each dual vertex. Identity in chain and fan
    /// modes; the (i<j) orientation in classic mode.
    std::vector<arc_id> vertex_arc;
    /// Dual vertex carrying each primal arc (both orientations map to the same
    /// vertex in classic mode).
    std::vector<std::uint32_t> arc_vertex;
    /// Arc id of (j,i) for each arc (i,j), or `no_arc`.
    std::vector<arc_id> reverse_arc;
    /// Neighbor cap applied by sparsify_dual, if any.
    std::optional<std::size_t> sparsified_k;

    std::size_t vertex_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::size_t edge_count() const noexcept { return targets.size() / 2; }
    std::size_t degree(std::uint32_t u) const { return offsets[u + 1] - offsets[u]; }
    std::span<const std::uint32_t> neighbors(std::uint32_t u) const {
        return std::span<const std::uint32_t>(targets).subspan(offsets[u], degree(u));
    }
};

struct DualBuildStats {
    /// Candidate arcs examined while merging neighbor lists.
    std::size_t candidate_visits = 0;
};

/// Builds the dual of `g`. Classic mode requires a bidirected, loop-free
/// primal and throws ModeRequiresUndirected otherwise.
DualGraph build_dual(std::shared_ptr<const DirectedGraph> g, DualMode mode,
                     DualBuildStats* stats = nullptr);

inline DualGraph build_dual(const DirectedGraph& g, DualMode mode, DualBuildStats* stats = nullptr) {
    return build_dual(std::make_shared<const DirectedGraph>(g), mode, stats);
}

struct DualEdgeCountReport {
    std::size_t n = 0;
    std::size_t primal_edge_count = 0;
    std::size_t dual_vertex_count = 0;
    std::size_t dual_edge_count_actual = 0;
    std::int64_t dual_edge_count_formula = 0;
    bool formulas_agree = false;
    /// "undirected" for classic mode, "directed" otherwise.
    std::string_view formula_kind;
};

/// Compares the tallied dual edge count with the closed-form count:
/// 1/2 sum d_i^2 - |E| for classic mode (undirected primal) and
/// sum d_in * d_out - |E| for chain and fan modes.
DualEdgeCountReport count_report(const DualGraph& d);

/// Per-vertex neighbor draws made by sparsify_dual, for auditing.
struct SparsifyTrace {
    std::vector<std::vector<std::uint32_t>> kept;
};

/// Keeps min(k, degree) uniformly drawn neighbors per dual vertex; an edge
/// survives if either endpoint kept it. Deterministic in `seed`.
DualGraph sparsify_dual(const DualGraph& d, std::size_t k, std::uint64_t seed,
                        SparsifyTrace* trace = nullptr);

bool connected(const DualGraph& d);

}  // namespace dpgcnn
