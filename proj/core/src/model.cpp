#include "dpgcnn/model.hpp"

#include <string>

#include "dpgcnn/error.hpp"
#include "dpgcnn/optim.hpp"

namespace dpgcnn {

using nlohmann::json;

std::string_view to_string(Task t) {
    return t == Task::vertex_classification ? "vertex_classification" : "link_direction";
}

std::string_view to_string(LayerKind k) {
    switch (k) {
        case LayerKind::gat: return "gat";
        case LayerKind::dpgcnn: return "dpgcnn";
        case LayerKind::poly: return "poly";
        case LayerKind::dual_poly: return "dual_poly";
    }
    return "gat";
}

std::string_view to_string(DualInput d) { return d == DualInput::transformed ? "transformed" : "raw"; }

std::string_view to_string(LinkVariant v) {
    switch (v) {
        case LinkVariant::primal_gat: return "primal_gat";
        case LinkVariant::dual_gat: return "dual_gat";
        case LinkVariant::dpgcnn: return "dpgcnn";
    }
    return "dpgcnn";
}

Task task_from_string(std::string_view s) {
    if (s == "vertex_classification" || s == "vertex") return Task::vertex_classification;
    if (s == "link_direction" || s == "link") return Task::link_direction;
    fail(ErrorCode::invalid_config, "unknown task '" + std::string(s) + "'");
}

LayerKind layer_kind_from_string(std::string_view s) {
    if (s == "gat") return LayerKind::gat;
    if (s == "dpgcnn") return LayerKind::dpgcnn;
    if (s == "poly") return LayerKind::poly;
    if (s == "dual_poly") return LayerKind::dual_poly;
    fail(ErrorCode::invalid_config, "unknown layer kind '" + std::string(s) + "'");
}

DualInput dual_input_from_string(std::string_view s) {
    if (s == "transformed") return DualInput::transformed;
    if (s == "raw") return DualInput::raw;
    fail(ErrorCode::invalid_config, "unknown dual input '" + std::string(s) + "'");
}

LinkVariant link_variant_from_string(std::string_view s) {
    if (s == "primal_gat") return LinkVariant::primal_gat;
    if (s == "dual_gat") return LinkVariant::dual_gat;
    if (s == "dpgcnn") return LinkVariant::dpgcnn;
    fail(ErrorCode::invalid_config, "unknown link variant '" + std::string(s) + "'");
}

bool ModelSpec::needs_dual() const {
    if (task == Task::link_direction) return link_variant != LinkVariant::primal_gat;
    for (const LayerSpec& l : layers) {
        if (l.kind == LayerKind::dpgcnn || l.kind == LayerKind::dual_poly) return true;
    }
    return false;
}

json to_json(const ModelSpec& spec) {
    json layers = json::array();
    for (const LayerSpec& l : spec.layers) {
        layers.push_back({
            {"kind", to_string(l.kind)},
            {"out", l.out},
            {"heads", l.heads},
            {"merge", to_string(l.merge)},
            {"activation", to_string(l.activation)},
            {"dual_width", l.dual_width},
            {"dual_heads", l.dual_heads},
            {"dual_activation", to_string(l.dual_activation)},
            {"dual_input", to_string(l.dual_input)},
            {"order", l.order},
        });
    }
    json j = {
        {"task", to_string(spec.task)},
        {"layers", layers},
        {"link",
         {{"variant", to_string(spec.link_variant)},
          {"width", spec.link_width},
          {"layers", spec.link_layers},
          {"heads", spec.link_heads},
          {"reduction_width", spec.reduction_width}}},
        {"dual_mode", to_string(spec.dual_mode)},
        {"self_loops", spec.self_loops},
        {"dropout_sites", {{"input", spec.input_dropout}, {"attention", spec.attention_dropout}}},
        {"literal_self_feature", spec.literal_self_feature},
    };
    j["sparsify_k"] = spec.sparsify_k ? json(*spec.sparsify_k) : json(nullptr);
    return j;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::invalid_config, std::string("field '") + key + "': " + e.what());
    }
}

std::string get_str(const json& j, const char* key, std::string_view fallback) {
    return get_or<std::string>(j, key, std::string(fallback));
}

}  // namespace

ModelSpec model_spec_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::invalid_config, "model spec must be a JSON object");
    ModelSpec spec;
    spec.task = task_from_string(get_str(j, "task", to_string(spec.task)));
    if (auto it = j.find("layers"); it != j.end()) {
        if (!it->is_array()) fail(ErrorCode::invalid_config, "'layers' must be an array");
        for (const json& lj : *it) {
            LayerSpec l;
            l.kind = layer_kind_from_string(get_str(lj, "kind", to_string(l.kind)));
            l.out = get_or<std::size_t>(lj, "out", l.out);
            l.heads = get_or<std::size_t>(lj, "heads", l.heads);
            l.merge = head_merge_from_string(get_str(lj, "merge", to_string(l.merge)));
            l.activation = activation_from_string(get_str(lj, "activation", to_string(l.activation)));
            l.dual_width = get_or<std::size_t>(lj, "dual_width", l.dual_width);
            l.dual_heads = get_or<std::size_t>(lj, "dual_heads", l.dual_heads);
            l.dual_activation =
                activation_from_string(get_str(lj, "dual_activation", to_string(l.dual_activation)));
            l.dual_input = dual_input_from_string(get_str(lj, "dual_input", to_string(l.dual_input)));
            l.order = get_or<std::size_t>(lj, "order", l.order);
            spec.layers.push_back(l);
        }
    }
    if (auto it = j.find("link"); it != j.end() && it->is_object()) {
        const json& lj = *it;
        spec.link_variant = link_variant_from_string(get_str(lj, "variant", to_string(spec.link_variant)));
        spec.link_width = get_or<std::size_t>(lj, "width", spec.link_width);
        spec.link_layers = get_or<std::size_t>(lj, "layers", spec.link_layers);
        spec.link_heads = get_or<std::size_t>(lj, "heads", spec.link_heads);
        spec.reduction_width = get_or<std::size_t>(lj, "reduction_width", spec.reduction_width);
    }
    spec.dual_mode = dual_mode_from_string(get_str(j, "dual_mode", to_string(spec.dual_mode)));
    spec.self_loops = get_or<bool>(j, "self_loops", spec.self_loops);
    if (auto it = j.find("dropout_sites"); it != j.end() && it->is_object()) {
        spec.input_dropout = get_or<bool>(*it, "input", spec.input_dropout);
        spec.attention_dropout = get_or<bool>(*it, "attention", spec.attention_dropout);
    }
    spec.literal_self_feature = get_or<bool>(j, "literal_self_feature", spec.literal_self_feature);
    if (auto it = j.find("sparsify_k"); it != j.end() && !it->is_null()) {
        spec.sparsify_k = get_or<std::size_t>(j, "sparsify_k", 0);
    }
    return spec;
}

ModelSpec gat_vertex_spec(std::size_t classes) {
    ModelSpec spec;
    spec.layers = {
        LayerSpec{.kind = LayerKind::gat, .out = 8, .heads = 8, .merge = HeadMerge::concat, .activation = Activation::elu},
        LayerSpec{.kind = LayerKind::gat,
                  .out = classes,
                  .heads = 1,
                  .merge = HeadMerge::average,
                  .activation = Activation::softmax},
    };
    return spec;
}

ModelSpec dpgcnn_vertex_spec(std::size_t classes, DualPlacement placement) {
    ModelSpec spec = gat_vertex_spec(classes);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const bool dual = placement == DualPlacement::all || (placement == DualPlacement::first && i == 0) ||
                          (placement == DualPlacement::second && i == 1);
        if (!dual) continue;
        LayerSpec& l = spec.layers[i];
        l.kind = LayerKind::dpgcnn;
        l.dual_width = 32;
        l.dual_heads = 1;
        l.dual_activation = Activation::relu;
    }
    return spec;
}

ModelSpec poly_vertex_spec(std::size_t classes, std::size_t order, bool dual) {
    ModelSpec spec;
    LayerSpec first{.kind = LayerKind::poly, .out = 16, .activation = Activation::elu, .order = order};
    LayerSpec second{.kind = LayerKind::poly, .out = classes, .activation = Activation::softmax, .order = order};
    if (dual) {
        second.kind = LayerKind::dual_poly;
        second.dual_width = 16;
        second.dual_input = DualInput::raw;
    }
    spec.layers = {first, second};
    return spec;
}

ModelSpec link_spec(LinkVariant variant) {
    ModelSpec spec;
    spec.task = Task::link_direction;
    spec.link_variant = variant;
    return spec;
}

void validate(const ModelSpec& spec, std::size_t classes) {
    auto bad = [](const std::string& msg) { fail(ErrorCode::invalid_config, msg); };
    if (spec.sparsify_k && *spec.sparsify_k == 0) bad("sparsify_k must be >= 1");
    if (spec.needs_dual() && spec.dual_mode == DualMode::classic_line_graph && spec.self_loops) {
        bad("classic_line_graph mode cannot be combined with self_loops");
    }
    if (spec.task == Task::link_direction) {
        if (spec.dual_mode == DualMode::classic_line_graph) {
            bad("link direction needs one dual vertex per orientation (chain or fan mode)");
        }
        if (spec.link_layers == 0 || spec.link_width == 0 || spec.link_heads == 0) bad("empty link architecture");
        if (spec.link_variant == LinkVariant::dual_gat && spec.reduction_width == 0) bad("reduction_width is zero");
        return;
    }
    if (spec.layers.empty()) bad("vertex model has no layers");
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::string where = "layer " + std::to_string(i) + ": ";
        if (l.out == 0 || l.heads == 0) bad(where + "zero width or heads");
        if ((l.kind == LayerKind::poly || l.kind == LayerKind::dual_poly) && l.heads != 1) {
            bad(where + "polynomial layers have a single head");
        }
        if ((l.kind == LayerKind::dpgcnn || l.kind == LayerKind::dual_poly) && (l.dual_width == 0 || l.dual_heads == 0)) {
            bad(where + "zero dual width or heads");
        }
        if (l.kind == LayerKind::dual_poly && l.dual_input != DualInput::raw) {
            bad(where + "dual_poly layers read the raw layer input (dual_input must be 'raw')");
        }
    }
    const LayerSpec& last = spec.layers.back();
    const std::size_t final_width = last.merge == HeadMerge::concat ? last.out * last.heads : last.out;
    if (classes > 0 && final_width != classes) {
        bad("final width " + std::to_string(final_width) + " differs from class count " + std::to_string(classes));
    }
}

GraphContext make_context(const DirectedGraph& g, const ModelSpec& spec, std::uint64_t seed) {
    GraphContext gc;
    gc.graph = std::make_shared<const DirectedGraph>(spec.self_loops ? add_self_loops(g) : g);
    if (spec.needs_dual()) {
        DualGraph d = build_dual(gc.graph, spec.dual_mode);
        if (spec.sparsify_k) d = sparsify_dual(d, *spec.sparsify_k, seed);
        gc.dual = std::move(d);
        gc.dual_nb = dual_neighborhoods(*gc.dual);
    }
    gc.primal_nb = incoming_neighborhoods(*gc.graph, gc.dual ? &*gc.dual : nullptr);
    return gc;
}

namespace {

Var maybe_dropout(Var x, bool site, double keep, ForwardContext& ctx) {
    if (!site || !ctx.training || keep >= 1.0) return x;
    if (ctx.rng == nullptr) fail(ErrorCode::invalid_config, "dropout needs an rng");
    return dropout(x, keep, *ctx.rng, true);
}

const DualGraph& require_dual(const GraphContext& gc) {
    if (!gc.dual) fail(ErrorCode::invalid_config, "model needs a dual graph but the context has none");
    return *gc.dual;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vertex model

VertexModel::VertexModel(const ModelSpec& spec, std::size_t in_width, std::size_t classes, Rng& init)
    : spec_(spec) {
    validate(spec, classes);
    if (spec.task != Task::vertex_classification) fail(ErrorCode::invalid_config, "not a vertex model spec");
    std::size_t width = in_width;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::string name = "layer" + std::to_string(i);
        Block b;
        b.spec = l;
        const std::size_t out_width = l.merge == HeadMerge::concat ? l.out * l.heads : l.out;
        switch (l.kind) {
            case LayerKind::gat:
                b.gat = GatLayer({width, l.out, l.heads, l.merge, l.activation}, init, name);
                break;
            case LayerKind::dpgcnn: {
                const std::size_t dual_in = l.dual_input == DualInput::transformed ? 2 * l.out * l.heads : 2 * width;
                b.dual = DualConvLayer({dual_in, l.dual_width, l.dual_heads, l.dual_activation, DualAttention::learned},
                                       init, name + ".dual");
                PrimalConvConfig pc;
                pc.in = width;
                pc.out = l.out;
                pc.heads = l.heads;
                pc.edge_width = l.dual_width * l.dual_heads;
                pc.merge = l.merge;
                pc.activation = l.activation;
                pc.literal_self_feature = spec.literal_self_feature;
                b.primal = PrimalConvLayer(pc, init, name + ".primal");
                break;
            }
            case LayerKind::poly:
                b.poly = PolyConvLayer({width, l.out, l.order, l.activation, PolyScorer::pair, 0}, init, name);
                break;
            case LayerKind::dual_poly:
                b.dual = DualConvLayer(
                    {2 * width, l.dual_width, l.dual_heads, l.dual_activation, DualAttention::learned}, init,
                    name + ".dual");
                b.poly = PolyConvLayer(
                    {width, l.out, l.order, l.activation, PolyScorer::edge, l.dual_width * l.dual_heads}, init,
                    name + ".poly");
                break;
        }
        blocks_.push_back(std::move(b));
        width = out_width;
    }
}

Var VertexModel::forward(Tape& tape, Var x, const GraphContext& gc, ForwardContext& ctx, double input_keep) {
    for (Block& b : blocks_) {
        x = maybe_dropout(x, spec_.input_dropout, input_keep, ctx);
        switch (b.spec.kind) {
            case LayerKind::gat:
                x = b.gat.forward(tape, x, gc.primal_nb, ctx);
                break;
            case LayerKind::dpgcnn: {
                const DualGraph& dual = require_dual(gc);
                std::vector<Var> transformed = b.primal.transform(tape, x);
                const EdgeInput input = b.spec.dual_input == DualInput::transformed
                                            ? EdgeInput::endpoint_pair(merge_heads(transformed, HeadMerge::concat))
                                            : EdgeInput::endpoint_pair(x);
                const Var edge = b.dual.forward(tape, input, dual, gc.dual_nb, ctx);
                x = b.primal.aggregate(tape, transformed, edge, gc.primal_nb, ctx);
                break;
            }
            case LayerKind::poly:
                x = b.poly.forward(tape, x, gc.primal_nb, ctx);
                break;
            case LayerKind::dual_poly: {
                const DualGraph& dual = require_dual(gc);
                const Var edge = b.dual.forward(tape, EdgeInput::endpoint_pair(x), dual, gc.dual_nb, ctx);
                x = b.poly.forward(tape, x, gc.primal_nb, ctx, edge);
                break;
            }
        }
    }
    return x;
}

std::vector<Parameter*> VertexModel::parameters() {
    std::vector<Parameter*> out;
    auto append = [&out](std::vector<Parameter*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
    for (Block& b : blocks_) {
        switch (b.spec.kind) {
            case LayerKind::gat: append(b.gat.parameters()); break;
            case LayerKind::dpgcnn:
                append(b.dual.parameters());
                append(b.primal.parameters());
                break;
            case LayerKind::poly: append(b.poly.parameters()); break;
            case LayerKind::dual_poly:
                append(b.dual.parameters());
                append(b.poly.parameters());
                break;
        }
    }
    return out;
}

std::size_t VertexModel::parameter_count() { return dpgcnn::parameter_count(parameters()); }

// ---------------------------------------------------------------------------
// Link model

LinkModel::LinkModel(const ModelSpec& spec, std::size_t in_width, Rng& init) : spec_(spec) {
    validate(spec, 0);
    if (spec.task != Task::link_direction) fail(ErrorCode::invalid_config, "not a link model spec");
    const std::size_t w = spec.link_width;
    const std::size_t hw = w * spec.link_heads;
    switch (spec.link_variant) {
        case LinkVariant::primal_gat: {
            std::size_t width = in_width;
            for (std::size_t l = 0; l < spec.link_layers; ++l) {
                gat_.emplace_back(GatConfig{width, w, spec.link_heads, HeadMerge::concat, Activation::elu}, init,
                                  "gat" + std::to_string(l));
                width = hw;
            }
            classifier_ = DenseLayer(2 * hw, 2, init, "fc");
            break;
        }
        case LinkVariant::dual_gat: {
            reduction_ = DenseLayer(in_width, spec.reduction_width, init, "reduce");
            std::size_t width = 2 * spec.reduction_width;
            for (std::size_t l = 0; l < spec.link_layers; ++l) {
                dual_.emplace_back(DualConvConfig{width, w, spec.link_heads, Activation::relu, DualAttention::learned},
                                   init, "dual" + std::to_string(l));
                width = hw;
            }
            classifier_ = DenseLayer(hw, 2, init, "fc");
            break;
        }
        case LinkVariant::dpgcnn: {
            std::size_t width = in_width;
            for (std::size_t l = 0; l < spec.link_layers; ++l) {
                PrimalConvConfig pc;
                pc.in = width;
                pc.out = w;
                pc.heads = spec.link_heads;
                pc.edge_width = hw;
                pc.merge = HeadMerge::concat;
                pc.activation = Activation::elu;
                pc.literal_self_feature = spec.literal_self_feature;
                // Layer 0 reads [f_i W, f_j W]; later layers read the previous
                // edge features and both refined endpoints.
                const std::size_t dual_in = l == 0 ? 2 * hw : hw + 2 * width;
                dual_.emplace_back(DualConvConfig{dual_in, w, spec.link_heads, Activation::relu, DualAttention::learned},
                                   init, "dual" + std::to_string(l));
                primal_.emplace_back(pc, init, "primal" + std::to_string(l));
                width = hw;
            }
            classifier_ = DenseLayer(3 * hw, 2, init, "fc");
            break;
        }
    }
}

Var LinkModel::forward(Tape& tape, Var x, const GraphContext& gc, ForwardContext& ctx, double input_keep) {
    const bool site = spec_.input_dropout;
    switch (spec_.link_variant) {
        case LinkVariant::primal_gat: {
            Var h = x;
            for (GatLayer& layer : gat_) h = layer.forward(tape, maybe_dropout(h, site, input_keep, ctx), gc.primal_nb, ctx);
            const DirectedGraph& g = *gc.graph;
            std::vector<std::uint32_t> src(g.arc_count());
            std::vector<std::uint32_t> dst(g.arc_count());
            for (arc_id a = 0; a < g.arc_count(); ++a) {
                src[a] = g.arc(a).src;
                dst[a] = g.arc(a).dst;
            }
            const Var pair = concat_cols(gather_rows(h, src), gather_rows(h, dst));
            return classifier_.forward(tape, maybe_dropout(pair, site, input_keep, ctx));
        }
        case LinkVariant::dual_gat: {
            const DualGraph& dual = require_dual(gc);
            const Var r = reduction_.forward(tape, maybe_dropout(x, site, input_keep, ctx));
            Var e;
            for (std::size_t l = 0; l < dual_.size(); ++l) {
                const EdgeInput input = l == 0 ? EdgeInput::endpoint_pair(maybe_dropout(r, site, input_keep, ctx))
                                               : EdgeInput{{{EdgeBlock::Kind::edge, maybe_dropout(e, site, input_keep, ctx)}}};
                e = dual_[l].forward(tape, input, dual, gc.dual_nb, ctx);
            }
            return classifier_.forward(tape, maybe_dropout(e, site, input_keep, ctx));
        }
        case LinkVariant::dpgcnn: {
            const DualGraph& dual = require_dual(gc);
            Var h = x;
            Var e;
            for (std::size_t l = 0; l < dual_.size(); ++l) {
                const Var hin = maybe_dropout(h, site, input_keep, ctx);
                if (l == 0) {
                    std::vector<Var> transformed = primal_[l].transform(tape, hin);
                    const EdgeInput input = EdgeInput::endpoint_pair(merge_heads(transformed, HeadMerge::concat));
                    e = dual_[l].forward(tape, input, dual, gc.dual_nb, ctx);
                    h = primal_[l].aggregate(tape, transformed, e, gc.primal_nb, ctx);
                } else {
                    const EdgeInput input{{{EdgeBlock::Kind::edge, maybe_dropout(e, site, input_keep, ctx)},
                                           {EdgeBlock::Kind::source, hin},
                                           {EdgeBlock::Kind::target, hin}}};
                    e = dual_[l].forward(tape, input, dual, gc.dual_nb, ctx);
                    h = primal_[l].forward(tape, hin, e, gc.primal_nb, ctx);
                }
            }
            const EdgeInput head{{{EdgeBlock::Kind::edge, e},
                                  {EdgeBlock::Kind::source, h},
                                  {EdgeBlock::Kind::target, h}}};
            return classifier_.forward(tape, maybe_dropout(materialize(head, dual), site, input_keep, ctx));
        }
    }
    fail(ErrorCode::invalid_config, "unknown link variant");
}

std::vector<Parameter*> LinkModel::parameters() {
    std::vector<Parameter*> out;
    auto append = [&out](std::vector<Parameter*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
    for (GatLayer& l : gat_) append(l.parameters());
    if (spec_.link_variant == LinkVariant::dual_gat) append(reduction_.parameters());
    for (std::size_t l = 0; l < dual_.size(); ++l) {
        append(dual_[l].parameters());
        if (l < primal_.size()) append(primal_[l].parameters());
    }
    append(classifier_.parameters());
    return out;
}

std::size_t LinkModel::parameter_count() { return dpgcnn::parameter_count(parameters()); }

}  // namespace dpgcnn
