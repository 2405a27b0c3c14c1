#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpgcnn/dual.hpp"
#include "dpgcnn/graph.hpp"
#include "dpgcnn/ops.hpp"
#include "dpgcnn/rng.hpp"
#include "dpgcnn/tape.hpp"

namespace dpgcnn {

/// Attention support grouped by receiver. Entry e says that `receiver[e]`
/// aggregates from `sender[e]`; entries are ordered by receiver.
struct Neighborhoods {
    std::size_t receiver_count = 0;
    std::size_t sender_count = 0;
    std::vector<std::uint32_t> receiver;
    std::vector<std::uint32_t> sender;
    /// Row of the edge-feature matrix describing entry e (primal only): the
    /// dual vertex of the arc (sender -> receiver).
    std::vector<std::uint32_t> edge_row;

    std::size_t entry_count() const noexcept { return receiver.size(); }
    /// Receivers with no entries.
    std::size_t empty_receivers() const;
};

/// Vertex i aggregates over its incoming arcs (j, i). When `dual` is given,
/// edge_row maps through dual.arc_vertex; otherwise it is the arc id.
Neighborhoods incoming_neighborhoods(const DirectedGraph& g, const DualGraph* dual = nullptr);

/// Dual vertex u aggregates over its dual neighbors.
Neighborhoods dual_neighborhoods(const DualGraph& d);

enum class Activation { none, relu, elu, softmax };
enum class HeadMerge { concat, average };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);
std::string_view to_string(HeadMerge m);
HeadMerge head_merge_from_string(std::string_view name);

/// `softmax` leaves logits untouched; the loss applies the softmax.
Var activate(Var x, Activation a);

struct ForwardContext {
    bool training = false;
    /// Keep probability for attention coefficients.
    double attention_keep = 1.0;
    Rng* rng = nullptr;
};

/// eta(a_recv . h_receiver + a_send . h_sender) per entry, i.e. the
/// attention vector applied to the concatenation [h_receiver, h_sender].
Var pair_attention_logits(Var h, Var attention, const Neighborhoods& nb);

/// Softmax within each receiver's neighborhood, with attention dropout in
/// training.
Var normalize_attention(Var logits, const Neighborhoods& nb, ForwardContext& ctx);

Var merge_heads(std::vector<Var> heads, HeadMerge merge);

struct DenseLayer {
    Parameter weight;
    Parameter bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Rng& init, const std::string& name);
    Var forward(Tape& tape, Var x);
    std::vector<Parameter*> parameters() { return {&weight, &bias}; }
};

struct GatConfig {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t heads = 1;
    HeadMerge merge = HeadMerge::concat;
    Activation activation = Activation::elu;
};

/// Graph attention layer: per head, alpha_ij = softmax_j eta(a . [f_i W, f_j W])
/// over the receiver's neighborhood and f'_i = sum_j alpha_ij f_j W.
class GatLayer {
public:
    struct Head {
        Parameter weight;     // in x out
        Parameter attention;  // 2*out x 1, receiver half first
    };

    GatLayer() = default;
    GatLayer(GatConfig config, Rng& init, const std::string& name);

    Var forward(Tape& tape, Var x, const Neighborhoods& nb, ForwardContext& ctx);

    const GatConfig& config() const noexcept { return config_; }
    std::size_t output_width() const noexcept;
    std::vector<Parameter*> parameters();

    std::vector<Head> heads;
    /// Attention coefficients of the latest forward, one m x 1 node per head.
    std::vector<Var> last_attention;

private:
    GatConfig config_;
};

/// Edge-level input to a dual convolution: the row-wise concatenation of
/// blocks, each either an edge-feature matrix (one row per dual vertex) or a
/// vertex-feature matrix read at the source or target of the dual vertex's arc.
struct EdgeBlock {
    enum class Kind { edge, source, target };
    Kind kind = Kind::edge;
    Var features;
};

struct EdgeInput {
    std::vector<EdgeBlock> blocks;

    std::size_t width() const;
    /// Concatenated features [f_i, f_j] of every dual vertex (i, j).
    static EdgeInput endpoint_pair(Var vertex_features);
};

/// Materializes the dual features [f_i, f_j] for every dual vertex (i, j).
Var dual_features_init(Var vertex_features, const DualGraph& dual);

/// Materializes an arbitrary EdgeInput as a dense ñ x width matrix.
Var materialize(const EdgeInput& input, const DualGraph& dual);

/// Multiplies the (virtual) edge-input matrix by `weight` without forming it:
/// vertex blocks are transformed first and then gathered per dual vertex.
Var edge_transform(Tape& tape, Var weight, const EdgeInput& input, const DualGraph& dual);

enum class DualAttention { learned, identity };

struct DualConvConfig {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t heads = 1;
    Activation activation = Activation::relu;
    DualAttention attention = DualAttention::learned;
};

/// Graph attention over the dual graph. A single softmax normalizes over the
/// union of a dual vertex's neighbors. Isolated dual vertices output
/// activation(0).
class DualConvLayer {
public:
    struct Head {
        Parameter weight;     // in x out
        Parameter attention;  // 2*out x 1
    };

    DualConvLayer() = default;
    DualConvLayer(DualConvConfig config, Rng& init, const std::string& name);

    Var forward(Tape& tape, const EdgeInput& input, const DualGraph& dual, const Neighborhoods& dual_nb,
                ForwardContext& ctx);

    const DualConvConfig& config() const noexcept { return config_; }
    void set_attention_mode(DualAttention mode) noexcept { config_.attention = mode; }
    std::size_t output_width() const noexcept { return config_.out * config_.heads; }
    std::vector<Parameter*> parameters();

    std::vector<Head> heads;
    std::vector<Var> last_attention;

private:
    DualConvConfig config_;
};

struct PrimalConvConfig {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t heads = 1;
    /// Width of the edge features the attention vector reads.
    std::size_t edge_width = 0;
    HeadMerge merge = HeadMerge::concat;
    Activation activation = Activation::elu;
    /// Aggregate f_i W (the receiver's own features) instead of f_j W.
    bool literal_self_feature = false;
};

/// Vertex attention whose scores come from edge features:
/// alpha_ij = softmax_j eta(a . f~'_ji) and f'_i = sum_j alpha_ij f_j W.
class PrimalConvLayer {
public:
    struct Head {
        Parameter weight;     // in x out
        Parameter attention;  // edge_width x 1
    };

    PrimalConvLayer() = default;
    PrimalConvLayer(PrimalConvConfig config, Rng& init, const std::string& name);

    /// Per-head x W.
    std::vector<Var> transform(Tape& tape, Var x);
    /// Attention-weighted aggregation of transformed heads.
    Var aggregate(Tape& tape, const std::vector<Var>& transformed, Var edge_features, const Neighborhoods& nb,
                  ForwardContext& ctx);
    Var forward(Tape& tape, Var x, Var edge_features, const Neighborhoods& nb, ForwardContext& ctx) {
        return aggregate(tape, transform(tape, x), edge_features, nb, ctx);
    }

    const PrimalConvConfig& config() const noexcept { return config_; }
    std::size_t output_width() const noexcept;
    std::vector<Parameter*> parameters();

    std::vector<Head> heads;
    std::vector<Var> last_attention;

private:
    PrimalConvConfig config_;
};

/// Where polynomial-filter attention scores come from.
enum class PolyScorer {
    /// eta(a_k . [h_i, h_j]) on the order-k transformed features.
    pair,
    /// eta(a_k . f~'_ji) on edge features.
    edge,
};

struct PolyConvConfig {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t order = 1;
    Activation activation = Activation::elu;
    PolyScorer scorer = PolyScorer::pair;
    std::size_t edge_width = 0;
};

/// Polynomial attention filter: f' = xi(sum_l f^(l) Theta_l) with
/// f^(k)_i = sum_j alpha^(k)_ij f^(k-1)_j, f^(0) = f, and an independent
/// attention scorer per order k >= 1.
class PolyConvLayer {
public:
    PolyConvLayer() = default;
    PolyConvLayer(PolyConvConfig config, Rng& init, const std::string& name);

    /// `edge_features` is required for the edge scorer and ignored otherwise.
    Var forward(Tape& tape, Var x, const Neighborhoods& nb, ForwardContext& ctx, Var edge_features = {});

    const PolyConvConfig& config() const noexcept { return config_; }
    std::vector<Parameter*> parameters();

    std::vector<Parameter> theta;      // order + 1 tables, in x out
    std::vector<Parameter> attention;  // one per order k >= 1
    std::vector<Var> last_attention;

private:
    PolyConvConfig config_;
};

/// Dual convolution on [f_i, f_j] followed by primal convolution scored by
/// its output. With `attention = identity` on the dual layer this is the
/// configuration under which the pair reduces to a plain GAT layer.
Var dual_primal_forward(Tape& tape, Var x, DualConvLayer& dual_layer, PrimalConvLayer& primal_layer,
                        const DualGraph& dual, const Neighborhoods& dual_nb, const Neighborhoods& primal_nb,
                        ForwardContext& ctx);

/// Runs dual_primal_forward with the dual attention fixed to the identity
/// assignment (each dual vertex attends only to itself).
Var gat_reduction(Tape& tape, Var x, DualConvLayer& dual_layer, PrimalConvLayer& primal_layer,
                  const DualGraph& dual, const Neighborhoods& dual_nb, const Neighborhoods& primal_nb,
                  ForwardContext& ctx);

struct InducedDualPrimal {
    DualConvLayer dual;
    PrimalConvLayer primal;
};

/// Dual and primal layers whose identity-attention composition equals `gat`:
/// per head the dual weight is blockdiag(W, W) with no activation, and the
/// primal attention vector holds the GAT attention halves in the slot of that
/// head.
InducedDualPrimal induce_from_gat(const GatLayer& gat);

}  // namespace dpgcnn
