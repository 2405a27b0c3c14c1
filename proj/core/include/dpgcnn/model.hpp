#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dpgcnn/dual.hpp"
#include "dpgcnn/graph.hpp"
#include "dpgcnn/layers.hpp"

namespace dpgcnn {

enum class Task { vertex_classification, link_direction };

/// Vertex-model layer kinds.
///  - gat:       plain graph attention.
///  - dpgcnn:    dual convolution followed by a primal convolution scored on
///               its output.
///  - poly:      polynomial attention filter on the primal graph.
///  - dual_poly: dual convolution followed by a polynomial primal filter
///               whose per-order scores read the dual output.
enum class LayerKind { gat, dpgcnn, poly, dual_poly };

/// What a dpgcnn layer feeds its dual convolution.
///  - transformed: [f_i W, f_j W] using the primal layer's own head outputs.
///  - raw:         [f_i, f_j] on the layer input.
enum class DualInput { transformed, raw };

enum class LinkVariant { primal_gat, dual_gat, dpgcnn };

std::string_view to_string(Task t);
std::string_view to_string(LayerKind k);
std::string_view to_string(DualInput d);
std::string_view to_string(LinkVariant v);
Task task_from_string(std::string_view s);
LayerKind layer_kind_from_string(std::string_view s);
DualInput dual_input_from_string(std::string_view s);
LinkVariant link_variant_from_string(std::string_view s);

struct LayerSpec {
    LayerKind kind = LayerKind::gat;
    std::size_t out = 8;
    std::size_t heads = 1;
    HeadMerge merge = HeadMerge::concat;
    Activation activation = Activation::elu;
    // dual side (dpgcnn, dual_poly)
    std::size_t dual_width = 32;
    std::size_t dual_heads = 1;
    Activation dual_activation = Activation::relu;
    DualInput dual_input = DualInput::transformed;
    // poly, dual_poly
    std::size_t order = 1;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
    Task task = Task::vertex_classification;
    std::vector<LayerSpec> layers;  // vertex task

    // link task
    LinkVariant link_variant = LinkVariant::dpgcnn;
    std::size_t link_width = 16;
    std::size_t link_layers = 3;
    std::size_t link_heads = 1;
    std::size_t reduction_width = 16;  // dual_gat only

    DualMode dual_mode = DualMode::chain;
    bool self_loops = true;
    bool input_dropout = true;
    bool attention_dropout = true;
    bool literal_self_feature = false;
    std::optional<std::size_t> sparsify_k;

    bool needs_dual() const;
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

nlohmann::json to_json(const ModelSpec& spec);
/// Missing fields take their defaults; unknown enum names throw InvalidConfig.
ModelSpec model_spec_from_json(const nlohmann::json& j);

/// Two-layer GAT: 8 heads x 8 features (concat, ELU), then `classes` outputs
/// with one head.
ModelSpec gat_vertex_spec(std::size_t classes);

/// Which layers of the vertex DPGCNN run a dual convolution.
enum class DualPlacement { all, first, second };

/// The GAT architecture with a one-head, 32-feature dual convolution in
/// front of the primal layers selected by `placement`.
ModelSpec dpgcnn_vertex_spec(std::size_t classes, DualPlacement placement = DualPlacement::all);

/// Two polynomial layers of order p with 16 hidden features. With `dual`, the
/// second layer is a dual_poly layer with a 16-feature dual convolution.
ModelSpec poly_vertex_spec(std::size_t classes, std::size_t order, bool dual);

ModelSpec link_spec(LinkVariant variant);

/// Checks widths, head counts and mode compatibility. Throws InvalidConfig.
void validate(const ModelSpec& spec, std::size_t classes);

/// Graph structures shared by every forward pass of a run.
struct GraphContext {
    /// Graph the model runs on (self-loops added if requested).
    std::shared_ptr<const DirectedGraph> graph;
    std::optional<DualGraph> dual;
    Neighborhoods primal_nb;
    Neighborhoods dual_nb;
};

/// `seed` drives dual sparsification only.
GraphContext make_context(const DirectedGraph& g, const ModelSpec& spec, std::uint64_t seed = 0);

class VertexModel {
public:
    VertexModel(const ModelSpec& spec, std::size_t in_width, std::size_t classes, Rng& init);

    /// Logits, n x classes.
    Var forward(Tape& tape, Var x, const GraphContext& gc, ForwardContext& ctx, double input_keep = 1.0);

    std::vector<Parameter*> parameters();
    std::size_t parameter_count();
    const ModelSpec& spec() const noexcept { return spec_; }

private:
    struct Block {
        LayerSpec spec;
        GatLayer gat;
        DualConvLayer dual;
        PrimalConvLayer primal;
        PolyConvLayer poly;
    };

    ModelSpec spec_;
    std::vector<Block> blocks_;
};

/// Three convolutional layers and a fully connected classifier producing two
/// logits per dual vertex: class 1 means the dual vertex's orientation is the
/// true direction of its edge.
class LinkModel {
public:
    LinkModel(const ModelSpec& spec, std::size_t in_width, Rng& init);

    /// Logits, (dual vertex count) x 2.
    Var forward(Tape& tape, Var x, const GraphContext& gc, ForwardContext& ctx, double input_keep = 1.0);

    std::vector<Parameter*> parameters();
    std::size_t parameter_count();
    const ModelSpec& spec() const noexcept { return spec_; }

private:
    ModelSpec spec_;
    std::vector<GatLayer> gat_;
    DenseLayer reduction_;
    std::vector<DualConvLayer> dual_;
    std::vector<PrimalConvLayer> primal_;
    DenseLayer classifier_;
};

}  // namespace dpgcnn
