#include "dpgcnn/layers.hpp"

#include <algorithm>
#include <string>

#include "dpgcnn/error.hpp"
#include "dpgcnn/optim.hpp"

namespace dpgcnn {

std::size_t Neighborhoods::empty_receivers() const {
    std::vector<bool> seen(receiver_count, false);
    for (std::uint32_t r : receiver) seen[r] = true;
    return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
}

Neighborhoods incoming_neighborhoods(const DirectedGraph& g, const DualGraph* dual) {
    Neighborhoods nb;
    nb.receiver_count = g.vertex_count();
    nb.sender_count = g.vertex_count();
    nb.receiver.reserve(g.arc_count());
    nb.sender.reserve(g.arc_count());
    nb.edge_row.reserve(g.arc_count());
    for (vertex_id i = 0; i < g.vertex_count(); ++i) {
        for (arc_id a : g.in_arcs(i)) {
            nb.receiver.push_back(i);
            nb.sender.push_back(g.arc(a).src);
            nb.edge_row.push_back(dual != nullptr ? dual->arc_vertex[a] : a);
        }
    }
    return nb;
}

Neighborhoods dual_neighborhoods(const DualGraph& d) {
    Neighborhoods nb;
    nb.receiver_count = d.vertex_count();
    nb.sender_count = d.vertex_count();
    nb.receiver.reserve(d.targets.size());
    nb.sender.reserve(d.targets.size());
    for (std::uint32_t u = 0; u < d.vertex_count(); ++u) {
        for (std::uint32_t v : d.neighbors(u)) {
            nb.receiver.push_back(u);
            nb.sender.push_back(v);
        }
    }
    return nb;
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::none: return "none";
        case Activation::relu: return "relu";
        case Activation::elu: return "elu";
        case Activation::softmax: return "softmax";
    }
    return "none";
}

Activation activation_from_string(std::string_view name) {
    if (name == "none" || name == "linear") return Activation::none;
    if (name == "relu") return Activation::relu;
    if (name == "elu") return Activation::elu;
    if (name == "softmax") return Activation::softmax;
    fail(ErrorCode::invalid_config, "unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(HeadMerge m) { return m == HeadMerge::concat ? "concat" : "average"; }

HeadMerge head_merge_from_string(std::string_view name) {
    if (name == "concat") return HeadMerge::concat;
    if (name == "average" || name == "mean") return HeadMerge::average;
    fail(ErrorCode::invalid_config, "unknown head merge '" + std::string(name) + "'");
}

Var activate(Var x, Activation a) {
    switch (a) {
        case Activation::relu: return relu(x);
        case Activation::elu: return elu(x);
        case Activation::none:
        case Activation::softmax: return x;
    }
    return x;
}

Var pair_attention_logits(Var h, Var attention, const Neighborhoods& nb) {
    const std::size_t q = h.cols();
    if (attention.rows() != 2 * q || attention.cols() != 1) {
        fail(ErrorCode::shape_mismatch, "attention vector " + attention.value().shape_string() +
                                            " for features of width " + std::to_string(q));
    }
    const Var recv_score = matmul(h, row_slice(attention, 0, q));
    const Var send_score = matmul(h, row_slice(attention, q, q));
    return leaky_relu(add(gather_rows(recv_score, nb.receiver), gather_rows(send_score, nb.sender)));
}

Var normalize_attention(Var logits, const Neighborhoods& nb, ForwardContext& ctx) {
    Var alpha = segment_softmax(logits, nb.receiver, nb.receiver_count);
    if (ctx.training && ctx.attention_keep < 1.0) {
        if (ctx.rng == nullptr) fail(ErrorCode::invalid_config, "attention dropout needs an rng");
        alpha = dropout(alpha, ctx.attention_keep, *ctx.rng, true);
    }
    return alpha;
}

Var merge_heads(std::vector<Var> heads, HeadMerge merge) {
    if (heads.empty()) fail(ErrorCode::invalid_config, "layer with zero heads");
    Var out = heads.front();
    for (std::size_t h = 1; h < heads.size(); ++h) {
        out = merge == HeadMerge::concat ? concat_cols(out, heads[h]) : add(out, heads[h]);
    }
    if (merge == HeadMerge::average && heads.size() > 1) out = scale(out, 1.0 / static_cast<double>(heads.size()));
    return out;
}

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Rng& init, const std::string& name)
    : weight(name + ".W", glorot_uniform(in, out, init)), bias(name + ".b", Tensor(1, out)) {}

Var DenseLayer::forward(Tape& tape, Var x) {
    return add_bias(matmul(x, tape.parameter(weight)), tape.parameter(bias));
}

// ---------------------------------------------------------------------------
// GAT

GatLayer::GatLayer(GatConfig config, Rng& init, const std::string& name) : config_(config) {
    heads.reserve(config.heads);
    for (std::size_t h = 0; h < config.heads; ++h) {
        const std::string prefix = name + ".head" + std::to_string(h);
        Head head;
        head.weight = Parameter(prefix + ".W", glorot_uniform(config.in, config.out, init));
        head.attention = Parameter(prefix + ".a", glorot_uniform(2 * config.out, 1, init));
        heads.push_back(std::move(head));
    }
}

std::size_t GatLayer::output_width() const noexcept {
    return config_.merge == HeadMerge::concat ? config_.out * config_.heads : config_.out;
}

std::vector<Parameter*> GatLayer::parameters() {
    std::vector<Parameter*> out;
    for (Head& h : heads) {
        out.push_back(&h.weight);
        out.push_back(&h.attention);
    }
    return out;
}

Var GatLayer::forward(Tape& tape, Var x, const Neighborhoods& nb, ForwardContext& ctx) {
    if (x.cols() != config_.in) {
        fail(ErrorCode::shape_mismatch, "gat input width " + std::to_string(x.cols()) + ", expected " +
                                            std::to_string(config_.in));
    }
    if (const std::size_t empty = nb.empty_receivers(); empty > 0) {
        fail(ErrorCode::empty_neighborhood,
             std::to_string(empty) + " vertices have no incoming arcs (enable self-loops?)");
    }
    last_attention.clear();
    std::vector<Var> outputs;
    for (Head& head : heads) {
        const Var h = matmul(x, tape.parameter(head.weight));
        const Var alpha = normalize_attention(pair_attention_logits(h, tape.parameter(head.attention), nb), nb, ctx);
        last_attention.push_back(alpha);
        outputs.push_back(attend(alpha, h, nb.receiver, nb.sender, nb.receiver_count));
    }
    return activate(merge_heads(std::move(outputs), config_.merge), config_.activation);
}

// ---------------------------------------------------------------------------
// Edge inputs

std::size_t EdgeInput::width() const {
    std::size_t w = 0;
    for (const EdgeBlock& b : blocks) w += b.features.cols();
    return w;
}

EdgeInput EdgeInput::endpoint_pair(Var vertex_features) {
    return EdgeInput{{{EdgeBlock::Kind::source, vertex_features}, {EdgeBlock::Kind::target, vertex_features}}};
}

namespace {

std::vector<std::uint32_t> endpoints(const DualGraph& dual, EdgeBlock::Kind kind) {
    const DirectedGraph& g = *dual.primal;
    std::vector<std::uint32_t> out(dual.vertex_count());
    for (std::uint32_t u = 0; u < out.size(); ++u) {
        const Arc& a = g.arc(dual.vertex_arc[u]);
        out[u] = kind == EdgeBlock::Kind::source ? a.src : a.dst;
    }
    return out;
}

Var block_rows(const EdgeBlock& block, const DualGraph& dual) {
    if (block.kind == EdgeBlock::Kind::edge) {
        if (block.features.rows() != dual.vertex_count()) {
            fail(ErrorCode::shape_mismatch, "edge features have " + std::to_string(block.features.rows()) +
                                                " rows for " + std::to_string(dual.vertex_count()) +
                                                " dual vertices");
        }
        return block.features;
    }
    return gather_rows(block.features, endpoints(dual, block.kind));
}

}  // namespace

Var dual_features_init(Var vertex_features, const DualGraph& dual) {
    return materialize(EdgeInput::endpoint_pair(vertex_features), dual);
}

Var materialize(const EdgeInput& input, const DualGraph& dual) {
    if (input.blocks.empty()) fail(ErrorCode::invalid_config, "empty edge input");
    Var out = block_rows(input.blocks.front(), dual);
    for (std::size_t b = 1; b < input.blocks.size(); ++b) out = concat_cols(out, block_rows(input.blocks[b], dual));
    return out;
}

Var edge_transform(Tape& tape, Var weight, const EdgeInput& input, const DualGraph& dual) {
    (void)tape;
    if (weight.rows() != input.width()) {
        fail(ErrorCode::shape_mismatch, "edge weight has " + std::to_string(weight.rows()) +
                                            " rows for edge input of width " + std::to_string(input.width()));
    }
    Var total;
    std::size_t offset = 0;
    for (const EdgeBlock& block : input.blocks) {
        const std::size_t w = block.features.cols();
        const Var slice = row_slice(weight, offset, w);
        offset += w;
        Var term;
        if (block.kind == EdgeBlock::Kind::edge) {
            term = matmul(block_rows(block, dual), slice);
        } else {
            term = gather_rows(matmul(block.features, slice), endpoints(dual, block.kind));
        }
        total = total.valid() ? add(total, term) : term;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Dual convolution

DualConvLayer::DualConvLayer(DualConvConfig config, Rng& init, const std::string& name) : config_(config) {
    heads.reserve(config.heads);
    for (std::size_t h = 0; h < config.heads; ++h) {
        const std::string prefix = name + ".head" + std::to_string(h);
        Head head;
        head.weight = Parameter(prefix + ".W", glorot_uniform(config.in, config.out, init));
        head.attention = Parameter(prefix + ".a", glorot_uniform(2 * config.out, 1, init));
        heads.push_back(std::move(head));
    }
}

std::vector<Parameter*> DualConvLayer::parameters() {
    std::vector<Parameter*> out;
    for (Head& h : heads) {
        out.push_back(&h.weight);
        // Identity attention never reads the vector.
        if (config_.attention == DualAttention::learned) out.push_back(&h.attention);
    }
    return out;
}

Var DualConvLayer::forward(Tape& tape, const EdgeInput& input, const DualGraph& dual, const Neighborhoods& dual_nb,
                           ForwardContext& ctx) {
    if (input.width() != config_.in) {
        fail(ErrorCode::shape_mismatch, "dual conv input width " + std::to_string(input.width()) + ", expected " +
                                            std::to_string(config_.in));
    }
    last_attention.clear();
    std::vector<Var> outputs;
    for (Head& head : heads) {
        const Var h = edge_transform(tape, tape.parameter(head.weight), input, dual);
        if (config_.attention == DualAttention::identity) {
            outputs.push_back(h);
            continue;
        }
        const Var alpha =
            normalize_attention(pair_attention_logits(h, tape.parameter(head.attention), dual_nb), dual_nb, ctx);
        last_attention.push_back(alpha);
        outputs.push_back(attend(alpha, h, dual_nb.receiver, dual_nb.sender, dual_nb.receiver_count));
    }
    return activate(merge_heads(std::move(outputs), HeadMerge::concat), config_.activation);
}

// ---------------------------------------------------------------------------
// Primal convolution

PrimalConvLayer::PrimalConvLayer(PrimalConvConfig config, Rng& init, const std::string& name) : config_(config) {
    heads.reserve(config.heads);
    for (std::size_t h = 0; h < config.heads; ++h) {
        const std::string prefix = name + ".head" + std::to_string(h);
        Head head;
        head.weight = Parameter(prefix + ".W", glorot_uniform(config.in, config.out, init));
        head.attention = Parameter(prefix + ".a", glorot_uniform(config.edge_width, 1, init));
        heads.push_back(std::move(head));
    }
}

std::size_t PrimalConvLayer::output_width() const noexcept {
    return config_.merge == HeadMerge::concat ? config_.out * config_.heads : config_.out;
}

std::vector<Parameter*> PrimalConvLayer::parameters() {
    std::vector<Parameter*> out;
    for (Head& h : heads) {
        out.push_back(&h.weight);
        out.push_back(&h.attention);
    }
    return out;
}

std::vector<Var> PrimalConvLayer::transform(Tape& tape, Var x) {
    if (x.cols() != config_.in) {
        fail(ErrorCode::shape_mismatch, "primal conv input width " + std::to_string(x.cols()) + ", expected " +
                                            std::to_string(config_.in));
    }
    std::vector<Var> out;
    out.reserve(heads.size());
    for (Head& head : heads) out.push_back(matmul(x, tape.parameter(head.weight)));
    return out;
}

Var PrimalConvLayer::aggregate(Tape& tape, const std::vector<Var>& transformed, Var edge_features,
                               const Neighborhoods& nb, ForwardContext& ctx) {
    if (transformed.size() != heads.size()) fail(ErrorCode::shape_mismatch, "head count mismatch");
    if (edge_features.cols() != config_.edge_width) {
        fail(ErrorCode::shape_mismatch, "edge features of width " + std::to_string(edge_features.cols()) +
                                            ", attention expects " + std::to_string(config_.edge_width));
    }
    const auto& gather_from = config_.literal_self_feature ? nb.receiver : nb.sender;
    last_attention.clear();
    std::vector<Var> outputs;
    for (std::size_t h = 0; h < heads.size(); ++h) {
        const Var score = matmul(edge_features, tape.parameter(heads[h].attention));
        const Var alpha = normalize_attention(leaky_relu(gather_rows(score, nb.edge_row)), nb, ctx);
        last_attention.push_back(alpha);
        outputs.push_back(attend(alpha, transformed[h], nb.receiver, gather_from, nb.receiver_count));
    }
    return activate(merge_heads(std::move(outputs), config_.merge), config_.activation);
}

// ---------------------------------------------------------------------------
// Polynomial attention filters

PolyConvLayer::PolyConvLayer(PolyConvConfig config, Rng& init, const std::string& name) : config_(config) {
    if (config.scorer == PolyScorer::edge && config.edge_width == 0) {
        fail(ErrorCode::invalid_config, "edge-scored polynomial layer needs edge_width > 0");
    }
    theta.reserve(config.order + 1);
    for (std::size_t l = 0; l <= config.order; ++l) {
        theta.emplace_back(name + ".theta" + std::to_string(l), glorot_uniform(config.in, config.out, init));
    }
    attention.reserve(config.order);
    for (std::size_t k = 1; k <= config.order; ++k) {
        const std::size_t len = config.scorer == PolyScorer::pair ? 2 * config.out : config.edge_width;
        attention.emplace_back(name + ".a" + std::to_string(k), glorot_uniform(len, 1, init));
    }
}

std::vector<Parameter*> PolyConvLayer::parameters() {
    std::vector<Parameter*> out;
    for (Parameter& p : theta) out.push_back(&p);
    for (Parameter& p : attention) out.push_back(&p);
    return out;
}

Var PolyConvLayer::forward(Tape& tape, Var x, const Neighborhoods& nb, ForwardContext& ctx, Var edge_features) {
    if (x.cols() != config_.in) {
        fail(ErrorCode::shape_mismatch, "poly conv input width " + std::to_string(x.cols()) + ", expected " +
                                            std::to_string(config_.in));
    }
    if (config_.scorer == PolyScorer::edge && !edge_features.valid()) {
        fail(ErrorCode::invalid_config, "edge-scored polynomial layer called without edge features");
    }
    // f^(l) Theta_l = A^(l) ... A^(1) (F Theta_l): diffusing the narrow
    // transformed features is exact and avoids diffusing raw inputs.
    std::vector<Var> transformed;
    for (Parameter& p : theta) transformed.push_back(matmul(x, tape.parameter(p)));

    last_attention.clear();
    for (std::size_t k = 1; k <= config_.order; ++k) {
        const Var a = tape.parameter(attention[k - 1]);
        Var logits;
        if (config_.scorer == PolyScorer::pair) {
            logits = pair_attention_logits(transformed[k], a, nb);
        } else {
            logits = leaky_relu(gather_rows(matmul(edge_features, a), nb.edge_row));
        }
        last_attention.push_back(normalize_attention(logits, nb, ctx));
    }

    Var out = transformed[0];
    for (std::size_t l = 1; l <= config_.order; ++l) {
        Var z = transformed[l];
        for (std::size_t k = 1; k <= l; ++k) {
            z = attend(last_attention[k - 1], z, nb.receiver, nb.sender, nb.receiver_count);
        }
        out = add(out, z);
    }
    return activate(out, config_.activation);
}

// ---------------------------------------------------------------------------
// Compositions

Var dual_primal_forward(Tape& tape, Var x, DualConvLayer& dual_layer, PrimalConvLayer& primal_layer,
                        const DualGraph& dual, const Neighborhoods& dual_nb, const Neighborhoods& primal_nb,
                        ForwardContext& ctx) {
    const Var edge = dual_layer.forward(tape, EdgeInput::endpoint_pair(x), dual, dual_nb, ctx);
    return primal_layer.forward(tape, x, edge, primal_nb, ctx);
}

Var gat_reduction(Tape& tape, Var x, DualConvLayer& dual_layer, PrimalConvLayer& primal_layer,
                  const DualGraph& dual, const Neighborhoods& dual_nb, const Neighborhoods& primal_nb,
                  ForwardContext& ctx) {
    const DualAttention saved = dual_layer.config().attention;
    dual_layer.set_attention_mode(DualAttention::identity);
    const Var out = dual_primal_forward(tape, x, dual_layer, primal_layer, dual, dual_nb, primal_nb, ctx);
    dual_layer.set_attention_mode(saved);
    return out;
}

InducedDualPrimal induce_from_gat(const GatLayer& gat) {
    const GatConfig& gc = gat.config();
    const std::size_t q = gc.in;
    const std::size_t qp = gc.out;
    const std::size_t nh = gc.heads;

    InducedDualPrimal out;
    Rng unused(0);
    out.dual = DualConvLayer({2 * q, 2 * qp, nh, Activation::none, DualAttention::identity}, unused, "induced.dual");
    PrimalConvConfig pc;
    pc.in = q;
    pc.out = qp;
    pc.heads = nh;
    pc.edge_width = nh * 2 * qp;
    pc.merge = gc.merge;
    pc.activation = gc.activation;
    out.primal = PrimalConvLayer(pc, unused, "induced.primal");

    for (std::size_t h = 0; h < nh; ++h) {
        const Tensor& w = gat.heads[h].weight.value;
        const Tensor& a = gat.heads[h].attention.value;

        Tensor block(2 * q, 2 * qp);
        for (std::size_t r = 0; r < q; ++r) {
            for (std::size_t c = 0; c < qp; ++c) {
                block(r, c) = w(r, c);            // source endpoint -> first half
                block(q + r, qp + c) = w(r, c);   // target endpoint -> second half
            }
        }
        out.dual.heads[h].weight.value = block;
        out.dual.heads[h].attention.value = Tensor(4 * qp, 1);

        out.primal.heads[h].weight.value = w;
        // Incoming arc (j -> i) carries [f_j W, f_i W]; GAT scores [f_i W, f_j W].
        Tensor pa(nh * 2 * qp, 1);
        for (std::size_t c = 0; c < qp; ++c) {
            pa[h * 2 * qp + c] = a[qp + c];
            pa[h * 2 * qp + qp + c] = a[c];
        }
        out.primal.heads[h].attention.value = pa;
    }
    for (auto* p : out.dual.parameters()) p->zero_grad();
    for (auto* p : out.primal.parameters()) p->zero_grad();
    return out;
}

}  // namespace dpgcnn
