#include "dpgcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dpgcnn/error.hpp"
#include "dpgcnn/layers.hpp"
#include "dpgcnn/model.hpp"
#include "dpgcnn/ops.hpp"
#include "dpgcnn/synthetic.hpp"

namespace dpgcnn {

using nlohmann::json;

std::vector<double> gradient_errors(const LossFn& loss, std::span<Parameter* const> params, GradCheckOptions options) {
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        tape.backward(loss(tape));
    }
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) {
        analytic.push_back(p->grad);
        p->zero_grad();
    }
    auto eval = [&] {
        Tape tape;
        return loss(tape).value()[0];
    };
    std::vector<double> errors;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        double diff2 = 0.0;
        double a2 = 0.0;
        double n2 = 0.0;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + options.step;
            const double up = eval();
            p.value[i] = saved - options.step;
            const double down = eval();
            p.value[i] = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            const double a = analytic[k][i];
            diff2 += (a - numeric) * (a - numeric);
            a2 += a * a;
            n2 += numeric * numeric;
        }
        const double denom = std::max({std::sqrt(a2), std::sqrt(n2), options.floor});
        errors.push_back(std::sqrt(diff2) / denom);
    }
    return errors;
}

bool GradCheckReport::passed() const {
    return std::all_of(results.begin(), results.end(), [](const GradCheckResult& r) { return r.passed(); });
}

std::vector<GradCheckResult> GradCheckReport::worst(std::size_t count) const {
    std::vector<GradCheckResult> out = results;
    std::stable_sort(out.begin(), out.end(),
                     [](const GradCheckResult& a, const GradCheckResult& b) { return a.max_rel_error > b.max_rel_error; });
    if (out.size() > count) out.resize(count);
    return out;
}

json to_json(const GradCheckReport& report) {
    json results = json::array();
    for (const GradCheckResult& r : report.results) {
        results.push_back({{"name", r.name},
                           {"cases", r.cases},
                           {"max_rel_error", r.max_rel_error},
                           {"threshold", r.threshold},
                           {"passed", r.passed()}});
    }
    json worst = json::array();
    for (const GradCheckResult& r : report.worst(3)) worst.push_back({{"name", r.name}, {"max_rel_error", r.max_rel_error}});
    return {{"passed", report.passed()}, {"results", results}, {"worst", worst}};
}

Var faulty_square(Var x) {
    Tensor y = x.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= y[i];
    const std::size_t ix = x.id();
    return x.tape().record(OpKind::custom, std::move(y), {x}, [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(ix);
        Tensor& dx = t.grad_slot(ix);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += 3.0 * xv[i] * g[i];
    });
}

namespace {

/// sum(a .* r) for a constant r, so every output entry gets a generic weight.
Var weighted_sum(Var a, const Tensor& r) {
    const Tensor& A = a.value();
    if (!A.same_shape(r)) fail(ErrorCode::shape_mismatch, "weighted_sum: " + A.shape_string() + " vs " + r.shape_string());
    double s = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) s += A[i] * r[i];
    const std::size_t ia = a.id();
    return a.tape().record(OpKind::custom, Tensor(1, 1, s), {a}, [ia, r](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        Tensor& da = t.grad_slot(ia);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += g * r[i];
    });
}

/// Entries uniform on +-1, kept away from the kinks of relu-like ops.
Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double v = rng.uniform(-1.0, 1.0);
        if (std::abs(v) < 0.05) v = v < 0 ? -0.05 - rng.uniform(0.0, 0.5) : 0.05 + rng.uniform(0.0, 0.5);
        t[i] = v;
    }
    return t;
}

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); }

std::vector<std::uint32_t> random_index(std::size_t count, std::size_t bound, Rng& rng) {
    std::vector<std::uint32_t> out(count);
    for (auto& v : out) v = static_cast<std::uint32_t>(rng.below(bound));
    return out;
}

/// One named check run over many random cases; keeps the worst error.
class Suite {
public:
    Suite(double threshold, std::size_t cases) : threshold_(threshold), cases_(cases) {}

    /// `make_case` builds parameters (owned by the case) and returns the loss.
    template <typename MakeCase>
    void run(const std::string& name, Rng& rng, MakeCase make_case) {
        GradCheckResult r{name, cases_, 0.0, threshold_};
        for (std::size_t c = 0; c < cases_; ++c) {
            std::vector<std::unique_ptr<Parameter>> owned;
            std::vector<Parameter*> params;
            auto param = [&](Tensor value) -> Parameter& {
                owned.push_back(std::make_unique<Parameter>("p" + std::to_string(owned.size()), std::move(value)));
                params.push_back(owned.back().get());
                return *owned.back();
            };
            LossFn loss = make_case(rng, param, params);
            std::vector<double> errs = gradient_errors(loss, params);
            // A 1e-6 step can straddle a ReLU/ELU kink. Retry once with a
            // smaller step; a wrong gradient stays wrong at every step.
            if (*std::max_element(errs.begin(), errs.end()) >= threshold_) {
                const std::vector<double> fine = gradient_errors(loss, params, {.step = 1e-8});
                for (std::size_t i = 0; i < errs.size(); ++i) errs[i] = std::min(errs[i], fine[i]);
            }
            for (double e : errs) r.max_rel_error = std::max(r.max_rel_error, e);
        }
        report.results.push_back(r);
    }

    GradCheckReport report;

private:
    double threshold_;
    std::size_t cases_;
};

using ParamFactory = std::function<Parameter&(Tensor)>;

}  // namespace

GradCheckReport gradcheck_ops(std::size_t cases, std::uint64_t seed, bool inject_fault) {
    Rng rng(seed);
    Suite s(1e-5, cases);
    auto unary = [&](const std::string& name, auto op) {
        s.run(name, rng, [op](Rng& r, auto&& param, auto&) -> LossFn {
            Parameter& a = param(random_tensor(dim(r, 1, 5), dim(r, 1, 4), r));
            Tensor w = random_tensor(a.value.rows(), a.value.cols(), r);
            return [&a, w, op](Tape& t) { return weighted_sum(op(t.parameter(a)), w); };
        });
    };

    s.run("matmul", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 5), k = dim(r, 1, 5), n = dim(r, 1, 5);
        Parameter& a = param(random_tensor(m, k, r));
        Parameter& b = param(random_tensor(k, n, r));
        Tensor w = random_tensor(m, n, r);
        return [&a, &b, w](Tape& t) { return weighted_sum(matmul(t.parameter(a), t.parameter(b)), w); };
    });
    s.run("add", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 5), n = dim(r, 1, 4);
        Parameter& a = param(random_tensor(m, n, r));
        Parameter& b = param(random_tensor(m, n, r));
        Tensor w = random_tensor(m, n, r);
        return [&a, &b, w](Tape& t) { return weighted_sum(add(t.parameter(a), t.parameter(b)), w); };
    });
    s.run("add_bias", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 5), n = dim(r, 1, 4);
        Parameter& a = param(random_tensor(m, n, r));
        Parameter& b = param(random_tensor(1, n, r));
        Tensor w = random_tensor(m, n, r);
        return [&a, &b, w](Tape& t) { return weighted_sum(add_bias(t.parameter(a), t.parameter(b)), w); };
    });
    s.run("scale", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        Parameter& a = param(random_tensor(dim(r, 1, 5), dim(r, 1, 4), r));
        const double f = r.uniform(-2.0, 2.0);
        Tensor w = random_tensor(a.value.rows(), a.value.cols(), r);
        return [&a, f, w](Tape& t) { return weighted_sum(scale(t.parameter(a), f), w); };
    });
    s.run("concat_cols", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 5);
        Parameter& a = param(random_tensor(m, dim(r, 1, 3), r));
        Parameter& b = param(random_tensor(m, dim(r, 1, 3), r));
        Tensor w = random_tensor(m, a.value.cols() + b.value.cols(), r);
        return [&a, &b, w](Tape& t) { return weighted_sum(concat_cols(t.parameter(a), t.parameter(b)), w); };
    });
    s.run("row_slice", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 6);
        Parameter& a = param(random_tensor(m, dim(r, 1, 3), r));
        const std::size_t begin = r.below(m);
        const std::size_t count = 1 + r.below(m - begin);
        Tensor w = random_tensor(count, a.value.cols(), r);
        return [&a, begin, count, w](Tape& t) { return weighted_sum(row_slice(t.parameter(a), begin, count), w); };
    });
    s.run("gather_rows", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t n = dim(r, 1, 5);
        Parameter& a = param(random_tensor(n, dim(r, 1, 3), r));
        auto idx = random_index(dim(r, 1, 8), n, r);
        Tensor w = random_tensor(idx.size(), a.value.cols(), r);
        return [&a, idx, w](Tape& t) { return weighted_sum(gather_rows(t.parameter(a), idx), w); };
    });
    s.run("segment_sum", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 8), segs = dim(r, 1, 4);
        Parameter& a = param(random_tensor(m, dim(r, 1, 3), r));
        auto seg = random_index(m, segs, r);
        Tensor w = random_tensor(segs, a.value.cols(), r);
        return [&a, seg, segs, w](Tape& t) { return weighted_sum(segment_sum(t.parameter(a), seg, segs), w); };
    });
    s.run("segment_softmax", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 8), segs = dim(r, 1, 4);
        Parameter& a = param(random_tensor(m, 1, r));
        auto seg = random_index(m, segs, r);
        Tensor w = random_tensor(m, 1, r);
        return [&a, seg, segs, w](Tape& t) { return weighted_sum(segment_softmax(t.parameter(a), seg, segs), w); };
    });
    s.run("scale_rows", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 6);
        Parameter& wts = param(random_tensor(m, 1, r));
        Parameter& a = param(random_tensor(m, dim(r, 1, 3), r));
        Tensor w = random_tensor(m, a.value.cols(), r);
        return [&wts, &a, w](Tape& t) { return weighted_sum(scale_rows(t.parameter(wts), t.parameter(a)), w); };
    });
    s.run("attend", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 8), n = dim(r, 1, 5), segs = dim(r, 1, 4);
        Parameter& wts = param(random_tensor(m, 1, r));
        Parameter& v = param(random_tensor(n, dim(r, 1, 3), r));
        auto seg = random_index(m, segs, r);
        auto src = random_index(m, n, r);
        Tensor w = random_tensor(segs, v.value.cols(), r);
        return [&wts, &v, seg, src, segs, w](Tape& t) {
            return weighted_sum(attend(t.parameter(wts), t.parameter(v), seg, src, segs), w);
        };
    });
    unary("leaky_relu", [](Var a) { return leaky_relu(a); });
    unary("elu", [](Var a) { return elu(a); });
    unary("relu", [](Var a) { return relu(a); });
    s.run("dropout", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        Parameter& a = param(random_tensor(dim(r, 1, 5), dim(r, 1, 4), r));
        Tensor w = random_tensor(a.value.rows(), a.value.cols(), r);
        const std::uint64_t mask_seed = r.next();
        return [&a, w, mask_seed](Tape& t) {
            Rng mask_rng(mask_seed);
            return weighted_sum(dropout(t.parameter(a), 0.7, mask_rng, true), w);
        };
    });
    s.run("sum", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        Parameter& a = param(random_tensor(dim(r, 1, 5), dim(r, 1, 4), r));
        const double w = r.uniform(0.5, 2.0);
        return [&a, w](Tape& t) { return scale(sum(t.parameter(a)), w); };
    });
    s.run("cross_entropy", rng, [](Rng& r, auto&& param, auto&) -> LossFn {
        const std::size_t m = dim(r, 1, 6), c = dim(r, 2, 4);
        Parameter& a = param(random_tensor(m, c, r));
        std::vector<int> labels(m);
        for (int& l : labels) l = static_cast<int>(r.below(c));
        std::vector<std::uint32_t> mask;
        for (std::uint32_t i = 0; i < m; ++i) {
            if (r.bernoulli(0.6)) mask.push_back(i);
        }
        if (mask.empty()) mask.push_back(0);
        return [&a, labels, mask](Tape& t) { return masked_softmax_cross_entropy(t.parameter(a), labels, mask); };
    });
    if (inject_fault) unary("faulty_square", [](Var a) { return faulty_square(a); });
    return s.report;
}

namespace {

struct SmallGraph {
    std::shared_ptr<const DirectedGraph> g;
    DualGraph dual;
    Neighborhoods primal_nb;
    Neighborhoods dual_nb;
};

std::shared_ptr<SmallGraph> small_graph(Rng& rng, std::size_t n) {
    auto sg = std::make_shared<SmallGraph>();
    sg->g = std::make_shared<const DirectedGraph>(add_self_loops(random_connected_bidirected(n, n / 2, rng)));
    sg->dual = build_dual(sg->g, DualMode::chain);
    sg->primal_nb = incoming_neighborhoods(*sg->g, &sg->dual);
    sg->dual_nb = dual_neighborhoods(sg->dual);
    return sg;
}

/// Moves a layer's parameters under the suite's bookkeeping.
template <typename Layer>
void adopt(std::vector<Parameter*>& params, Layer& layer) {
    for (Parameter* p : layer.parameters()) params.push_back(p);
}

}  // namespace

GradCheckReport gradcheck_layers(std::size_t cases, std::uint64_t seed, bool inject_fault) {
    Rng rng(seed);
    Suite s(1e-4, cases);
    ForwardContext eval_ctx{false, 1.0, nullptr};

    s.run("gat", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        auto sg = small_graph(r, 6);
        Parameter& x = param(random_tensor(6, 3, r));
        auto layer = std::make_shared<GatLayer>(GatConfig{3, 2, 2, HeadMerge::concat, Activation::elu}, r, "gat");
        adopt(params, *layer);
        Tensor w = random_tensor(6, layer->output_width(), r);
        return [&x, sg, layer, w, eval_ctx](Tape& t) mutable {
            return weighted_sum(layer->forward(t, t.parameter(x), sg->primal_nb, eval_ctx), w);
        };
    });
    s.run("dual_conv", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        auto sg = small_graph(r, 6);
        Parameter& x = param(random_tensor(6, 3, r));
        auto layer = std::make_shared<DualConvLayer>(
            DualConvConfig{6, 3, 2, Activation::relu, DualAttention::learned}, r, "dual");
        adopt(params, *layer);
        Tensor w = random_tensor(sg->dual.vertex_count(), layer->output_width(), r);
        return [&x, sg, layer, w, eval_ctx](Tape& t) mutable {
            return weighted_sum(
                layer->forward(t, EdgeInput::endpoint_pair(t.parameter(x)), sg->dual, sg->dual_nb, eval_ctx), w);
        };
    });
    s.run("dual_conv_mixed_input", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        auto sg = small_graph(r, 6);
        Parameter& x = param(random_tensor(6, 2, r));
        Parameter& e = param(random_tensor(sg->dual.vertex_count(), 3, r));
        auto layer = std::make_shared<DualConvLayer>(
            DualConvConfig{7, 3, 1, Activation::elu, DualAttention::learned}, r, "dual");
        adopt(params, *layer);
        Tensor w = random_tensor(sg->dual.vertex_count(), layer->output_width(), r);
        return [&x, &e, sg, layer, w, eval_ctx](Tape& t) mutable {
            const Var xv = t.parameter(x);
            const EdgeInput in{{{EdgeBlock::Kind::edge, t.parameter(e)},
                                {EdgeBlock::Kind::source, xv},
                                {EdgeBlock::Kind::target, xv}}};
            return weighted_sum(layer->forward(t, in, sg->dual, sg->dual_nb, eval_ctx), w);
        };
    });
    s.run("primal_conv", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        auto sg = small_graph(r, 6);
        Parameter& x = param(random_tensor(6, 3, r));
        Parameter& e = param(random_tensor(sg->dual.vertex_count(), 4, r));
        PrimalConvConfig pc;
        pc.in = 3;
        pc.out = 2;
        pc.heads = 2;
        pc.edge_width = 4;
        auto layer = std::make_shared<PrimalConvLayer>(pc, r, "primal");
        adopt(params, *layer);
        Tensor w = random_tensor(6, layer->output_width(), r);
        return [&x, &e, sg, layer, w, eval_ctx](Tape& t) mutable {
            return weighted_sum(layer->forward(t, t.parameter(x), t.parameter(e), sg->primal_nb, eval_ctx), w);
        };
    });
    s.run("dual_primal", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        auto sg = small_graph(r, 6);
        Parameter& x = param(random_tensor(6, 3, r));
        auto dual = std::make_shared<DualConvLayer>(DualConvConfig{6, 4, 1, Activation::relu, DualAttention::learned},
                                                    r, "dual");
        PrimalConvConfig pc;
        pc.in = 3;
        pc.out = 2;
        pc.heads = 2;
        pc.edge_width = 4;
        auto primal = std::make_shared<PrimalConvLayer>(pc, r, "primal");
        adopt(params, *dual);
        adopt(params, *primal);
        Tensor w = random_tensor(6, primal->output_width(), r);
        return [&x, sg, dual, primal, w, eval_ctx](Tape& t) mutable {
            return weighted_sum(dual_primal_forward(t, t.parameter(x), *dual, *primal, sg->dual, sg->dual_nb,
                                                    sg->primal_nb, eval_ctx),
                                w);
        };
    });
    s.run("poly_pair", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        auto sg = small_graph(r, 6);
        Parameter& x = param(random_tensor(6, 3, r));
        const std::size_t order = dim(r, 0, 3);
        auto layer = std::make_shared<PolyConvLayer>(
            PolyConvConfig{3, 2, order, Activation::elu, PolyScorer::pair, 0}, r, "poly");
        adopt(params, *layer);
        Tensor w = random_tensor(6, 2, r);
        return [&x, sg, layer, w, eval_ctx](Tape& t) mutable {
            return weighted_sum(layer->forward(t, t.parameter(x), sg->primal_nb, eval_ctx), w);
        };
    });
    s.run("poly_edge", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        auto sg = small_graph(r, 6);
        Parameter& x = param(random_tensor(6, 3, r));
        Parameter& e = param(random_tensor(sg->dual.vertex_count(), 3, r));
        const std::size_t order = dim(r, 1, 3);
        auto layer = std::make_shared<PolyConvLayer>(
            PolyConvConfig{3, 2, order, Activation::elu, PolyScorer::edge, 3}, r, "poly");
        adopt(params, *layer);
        Tensor w = random_tensor(6, 2, r);
        return [&x, &e, sg, layer, w, eval_ctx](Tape& t) mutable {
            return weighted_sum(layer->forward(t, t.parameter(x), sg->primal_nb, eval_ctx, t.parameter(e)), w);
        };
    });
    s.run("dense", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
        Parameter& x = param(random_tensor(5, 3, r));
        auto layer = std::make_shared<DenseLayer>(3, 2, r, "fc");
        layer->bias.value = random_tensor(1, 2, r);
        adopt(params, *layer);
        Tensor w = random_tensor(5, 2, r);
        return [&x, layer, w](Tape& t) { return weighted_sum(layer->forward(t, t.parameter(x)), w); };
    });
    if (inject_fault) {
        s.run("faulty_layer", rng, [&](Rng& r, auto&& param, std::vector<Parameter*>&) -> LossFn {
            Parameter& x = param(random_tensor(4, 2, r));
            Tensor w = random_tensor(4, 2, r);
            return [&x, w](Tape& t) { return weighted_sum(faulty_square(t.parameter(x)), w); };
        });
    }
    return s.report;
}

namespace {
constexpr std::size_t model_vertices = 10;
constexpr std::size_t model_features = 5;
constexpr std::size_t model_classes = 3;
}  // namespace

GradCheckReport gradcheck_model(std::size_t cases, std::uint64_t seed, bool inject_fault) {
    Rng rng(seed);
    Suite s(1e-4, cases);

    auto vertex_case = [&](const std::string& name, ModelSpec spec) {
        s.run(name, rng, [spec](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
            const DirectedGraph g = random_connected_bidirected(model_vertices, model_vertices / 2, r);
            auto gc = std::make_shared<GraphContext>(make_context(g, spec));
            Parameter& x = param(random_tensor(model_vertices, model_features, r));
            auto model = std::make_shared<VertexModel>(spec, model_features, model_classes, r);
            for (Parameter* p : model->parameters()) params.push_back(p);
            std::vector<int> labels(model_vertices);
            for (int& l : labels) l = static_cast<int>(r.below(model_classes));
            std::vector<std::uint32_t> mask;
            for (std::uint32_t i = 0; i < model_vertices; ++i) {
                if (r.bernoulli(0.5)) mask.push_back(i);
            }
            if (mask.empty()) mask.push_back(0);
            return [&x, gc, model, labels, mask](Tape& t) {
                ForwardContext ctx{false, 1.0, nullptr};
                return masked_softmax_cross_entropy(model->forward(t, t.parameter(x), *gc, ctx), labels, mask);
            };
        });
    };

    ModelSpec small_dpgcnn;
    small_dpgcnn.layers = {
        LayerSpec{.kind = LayerKind::dpgcnn, .out = 3, .heads = 2, .dual_width = 4, .dual_heads = 1},
        LayerSpec{.kind = LayerKind::dpgcnn,
                  .out = model_classes,
                  .heads = 1,
                  .merge = HeadMerge::average,
                  .activation = Activation::softmax,
                  .dual_width = 4,
                  .dual_heads = 1},
    };
    ModelSpec small_gat;
    small_gat.layers = {
        LayerSpec{.kind = LayerKind::gat, .out = 3, .heads = 2},
        LayerSpec{.kind = LayerKind::gat, .out = model_classes, .merge = HeadMerge::average, .activation = Activation::softmax},
    };
    ModelSpec small_poly = poly_vertex_spec(model_classes, 2, true);
    small_poly.layers[0].out = 4;
    small_poly.layers[1].dual_width = 3;

    vertex_case("vertex_dpgcnn", small_dpgcnn);
    vertex_case("vertex_gat", small_gat);
    vertex_case("vertex_dual_poly", small_poly);

    for (LinkVariant variant : {LinkVariant::primal_gat, LinkVariant::dual_gat, LinkVariant::dpgcnn}) {
        ModelSpec spec = link_spec(variant);
        spec.link_width = 3;
        spec.link_layers = 2;
        spec.reduction_width = 3;
        s.run("link_" + std::string(to_string(variant)), rng,
              [spec](Rng& r, auto&& param, std::vector<Parameter*>& params) -> LossFn {
                  const DirectedGraph g = random_connected_bidirected(model_vertices, model_vertices / 2, r);
                  auto gc = std::make_shared<GraphContext>(make_context(g, spec));
                  Parameter& x = param(random_tensor(model_vertices, model_features, r));
                  auto model = std::make_shared<LinkModel>(spec, model_features, r);
                  for (Parameter* p : model->parameters()) params.push_back(p);
                  const std::size_t rows = gc->graph->arc_count();
                  std::vector<int> labels(rows);
                  for (int& l : labels) l = static_cast<int>(r.below(2));
                  std::vector<std::uint32_t> mask;
                  for (std::uint32_t i = 0; i < rows; ++i) {
                      if (r.bernoulli(0.3)) mask.push_back(i);
                  }
                  if (mask.empty()) mask.push_back(0);
                  return [&x, gc, model, labels, mask](Tape& t) {
                      ForwardContext ctx{false, 1.0, nullptr};
                      return masked_softmax_cross_entropy(model->forward(t, t.parameter(x), *gc, ctx), labels, mask);
                  };
              });
    }
    if (inject_fault) {
        s.run("faulty_model", rng, [](Rng& r, auto&& param, std::vector<Parameter*>&) -> LossFn {
            Parameter& x = param(random_tensor(3, 2, r));
            Tensor w = random_tensor(3, 2, r);
            return [&x, w](Tape& t) { return weighted_sum(faulty_square(t.parameter(x)), w); };
        });
    }
    return s.report;
}

}  // namespace dpgcnn
