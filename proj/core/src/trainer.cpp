#include "dpgcnn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "dpgcnn/error.hpp"
#include "dpgcnn/ops.hpp"
#include "dpgcnn/optim.hpp"

namespace dpgcnn {

using nlohmann::json;

void validate(const TrainConfig& config) {
    if (!(config.dropout_keep > 0.0 && config.dropout_keep <= 1.0)) {
        fail(ErrorCode::invalid_config, "dropout_keep must be in (0, 1]");
    }
    if (config.patience > config.max_epochs) fail(ErrorCode::invalid_config, "patience exceeds max_epochs");
    if (!(config.lr > 0.0)) fail(ErrorCode::invalid_config, "learning rate must be positive");
    if (config.weight_decay < 0.0) fail(ErrorCode::invalid_config, "weight decay must be non-negative");
}

json to_json(const RunMetrics& m, bool timestamps) {
    json train_loss = json::array();
    json train_acc = json::array();
    json val_loss = json::array();
    json val_acc = json::array();
    for (const EpochRecord& e : m.epochs) {
        train_loss.push_back(e.train_loss);
        train_acc.push_back(e.train_acc);
        val_loss.push_back(e.val_loss);
        val_acc.push_back(e.val_acc);
    }
    json j = {
        {"seed", m.seed},
        {"epochs", m.epochs.size()},
        {"best_epoch", m.best_epoch},
        {"test_acc", m.test_acc},
        {"val_acc", m.best_val_acc},
        {"val_loss", m.best_val_loss},
        {"val_acc_curve", val_acc},
        {"val_loss_curve", val_loss},
        {"train_loss_curve", train_loss},
        {"train_acc_curve", train_acc},
        {"params", m.params},
        {"wall_ms", timestamps ? m.wall_ms : 0.0},
    };
    if (m.failed) {
        j["failed"] = true;
        j["error"] = m.error;
    }
    return j;
}

namespace {

double masked_cross_entropy_value(const Tensor& logits, const std::vector<int>& labels,
                                  const std::vector<std::uint32_t>& rows) {
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (std::uint32_t r : rows) {
        const auto row = logits.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - m);
        total += m + std::log(z) - row[static_cast<std::size_t>(labels[r])];
    }
    return total / static_cast<double>(rows.size());
}

double accuracy(const Tensor& logits, const std::vector<int>& labels, const std::vector<std::uint32_t>& rows) {
    if (rows.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::uint32_t r : rows) {
        const auto row = logits.row(r);
        const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

Weights snapshot(const std::vector<Parameter*>& params) {
    Weights w;
    w.reserve(params.size());
    for (const Parameter* p : params) w.push_back(p->value);
    return w;
}

void restore(const std::vector<Parameter*>& params, const Weights& w) {
    if (w.size() != params.size()) {
        fail(ErrorCode::shape_mismatch, "weights hold " + std::to_string(w.size()) + " tensors for " +
                                            std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!w[i].same_shape(params[i]->value)) {
            fail(ErrorCode::shape_mismatch, "weight '" + params[i]->name + "' expects " +
                                                params[i]->value.shape_string() + ", got " + w[i].shape_string());
        }
        params[i]->value = w[i];
    }
}

struct Evaluation {
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
};

/// Shared full-batch loop. `forward` builds logits on a tape; `train_loss`
/// records the differentiable training loss; `evaluate` scores eval-mode logits.
template <typename Model, typename Forward, typename TrainLoss, typename Evaluate>
RunMetrics fit(const TrainConfig& config, Model& model, std::uint64_t seed, Rng dropout_rng, Forward forward,
               TrainLoss train_loss, Evaluate evaluate, Weights* best_out) {
    validate(config);
    const auto start = std::chrono::steady_clock::now();
    RunMetrics m;
    m.seed = seed;
    const std::vector<Parameter*> params = model.parameters();
    m.params = parameter_count(params);

    Adam adam({.lr = config.lr, .weight_decay = config.weight_decay});
    Weights best = snapshot(params);
    double best_loss = std::numeric_limits<double>::infinity();
    double best_acc = -1.0;
    double min_loss = std::numeric_limits<double>::infinity();
    double max_acc = -1.0;
    std::size_t stale = 0;

    auto eval_now = [&] {
        Tape tape;
        ForwardContext ctx{false, 1.0, nullptr};
        const Var logits = forward(tape, ctx, 1.0);
        return evaluate(logits.value());
    };

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        EpochRecord rec;
        {
            Tape tape;
            ForwardContext ctx{true, config.dropout_keep, &dropout_rng};
            try {
                const Var loss = train_loss(forward(tape, ctx, config.dropout_keep));
                rec.train_loss = loss.value()[0];
                if (!std::isfinite(rec.train_loss)) {
                    fail(ErrorCode::diverged_loss, "seed " + std::to_string(seed) + ", epoch " + std::to_string(epoch) +
                                                       ": training loss is " + std::to_string(rec.train_loss));
                }
                tape.backward(loss);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::non_finite_value) throw;
                fail(ErrorCode::diverged_loss,
                     "seed " + std::to_string(seed) + ", epoch " + std::to_string(epoch) + ": " + e.what());
            }
            adam.step(params);
        }
        const Evaluation ev = eval_now();
        rec.train_acc = ev.train_acc;
        rec.val_loss = ev.val_loss;
        rec.val_acc = ev.val_acc;
        m.epochs.push_back(rec);

        if (ev.val_loss < best_loss || (ev.val_loss == best_loss && ev.val_acc > best_acc)) {
            best_loss = ev.val_loss;
            best_acc = ev.val_acc;
            best = snapshot(params);
            m.best_epoch = epoch;
        }
        if (ev.val_loss < min_loss || ev.val_acc > max_acc) {
            min_loss = std::min(min_loss, ev.val_loss);
            max_acc = std::max(max_acc, ev.val_acc);
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }

    restore(params, best);
    const Evaluation final_eval = eval_now();
    m.best_val_loss = final_eval.val_loss;
    m.best_val_acc = final_eval.val_acc;
    m.test_acc = final_eval.test_acc;
    if (best_out != nullptr) *best_out = std::move(best);
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return m;
}

std::uint64_t sparsify_seed(std::uint64_t seed) { return Rng(seed).stream(streams::sparsify).next(); }

}  // namespace

VertexProblem make_vertex_problem(const CitationDataset& data, const Split& split, bool normalize) {
    VertexProblem p;
    p.features = normalize ? row_normalize(data.content.features) : data.content.features;
    p.labels = data.content.labels;
    p.classes = data.content.class_count();
    p.graph = to_bidirected(remove_self_loops(data.graph));
    p.split = split;
    return p;
}

RunMetrics train_vertex(const TrainConfig& config, const ModelSpec& spec, const VertexProblem& problem,
                        std::uint64_t seed, Weights* best) {
    check_disjoint(problem.split, problem.features.rows());
    if (problem.labels.size() != problem.features.rows()) {
        fail(ErrorCode::shape_mismatch, "label count differs from feature rows");
    }
    const Rng root(seed);
    Rng init = root.stream(streams::init);
    VertexModel model(spec, problem.features.cols(), problem.classes, init);
    const GraphContext gc = make_context(problem.graph, spec, sparsify_seed(seed));
    if (gc.graph->vertex_count() != problem.features.rows()) {
        fail(ErrorCode::shape_mismatch, "graph has " + std::to_string(gc.graph->vertex_count()) + " vertices, features " +
                                            std::to_string(problem.features.rows()) + " rows");
    }

    auto forward = [&](Tape& tape, ForwardContext& ctx, double keep) {
        if (!spec.attention_dropout) ctx.attention_keep = 1.0;
        return model.forward(tape, tape.constant(problem.features), gc, ctx, keep);
    };
    auto train_loss = [&](Var logits) {
        return masked_softmax_cross_entropy(logits, problem.labels, problem.split.train);
    };
    auto evaluate = [&](const Tensor& logits) {
        Evaluation e;
        e.train_acc = accuracy(logits, problem.labels, problem.split.train);
        e.val_loss = masked_cross_entropy_value(logits, problem.labels, problem.split.val);
        e.val_acc = accuracy(logits, problem.labels, problem.split.val);
        e.test_acc = accuracy(logits, problem.labels, problem.split.test);
        return e;
    };
    return fit(config, model, seed, root.stream(streams::dropout), forward, train_loss, evaluate, best);
}

double evaluate_vertex(const ModelSpec& spec, const VertexProblem& problem, std::uint64_t seed,
                       const Weights& weights) {
    Rng init = Rng(seed).stream(streams::init);
    VertexModel model(spec, problem.features.cols(), problem.classes, init);
    if (!weights.empty()) restore(model.parameters(), weights);
    const GraphContext gc = make_context(problem.graph, spec, sparsify_seed(seed));
    if (gc.graph->vertex_count() != problem.features.rows()) {
        fail(ErrorCode::shape_mismatch, "graph and feature sizes differ");
    }
    Tape tape;
    ForwardContext ctx{false, 1.0, nullptr};
    const Var logits = model.forward(tape, tape.constant(problem.features), gc, ctx);
    return accuracy(logits.value(), problem.labels, problem.split.test);
}

LinkProblem make_link_problem(const CitationDataset& data, std::uint64_t seed, LinkFractions fractions,
                              bool normalize) {
    LinkProblem p;
    p.features = normalize ? row_normalize(data.content.features) : data.content.features;
    p.task = make_link_task(data.graph, fractions, seed);
    return p;
}

LinkLabels make_link_labels(const DirectedGraph& model_graph, const LinkTask& task) {
    LinkLabels out;
    out.labels.assign(model_graph.arc_count(), 0);
    auto fill = [&](const std::vector<Arc>& edges, std::vector<std::uint32_t>& rows,
                    std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
        for (const Arc& e : edges) {
            const auto fwd = model_graph.find_arc(e.src, e.dst);
            const auto rev = model_graph.find_arc(e.dst, e.src);
            if (!fwd || !rev) {
                fail(ErrorCode::invalid_config, "labeled edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                                    ") is missing an orientation in the model graph");
            }
            out.labels[*fwd] = 1;
            out.labels[*rev] = 0;
            rows.push_back(*fwd);
            rows.push_back(*rev);
            pairs.emplace_back(*fwd, *rev);
        }
        std::sort(rows.begin(), rows.end());
    };
    fill(task.train, out.train_rows, out.train_pairs);
    fill(task.val, out.val_rows, out.val_pairs);
    fill(task.test, out.test_rows, out.test_pairs);
    return out;
}

double edge_direction_accuracy(const Tensor& logits,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
    if (pairs.empty()) return 0.0;
    if (logits.cols() != 2) fail(ErrorCode::shape_mismatch, "direction logits must have two columns");
    auto log_softmax = [&](std::uint32_t r, int c) {
        const double a = logits(r, 0);
        const double b = logits(r, 1);
        const double m = std::max(a, b);
        return logits(r, static_cast<std::size_t>(c)) - m - std::log(std::exp(a - m) + std::exp(b - m));
    };
    std::size_t correct = 0;
    for (const auto& [fwd, rev] : pairs) {
        const double truth = log_softmax(fwd, 1) + log_softmax(rev, 0);
        const double flipped = log_softmax(fwd, 0) + log_softmax(rev, 1);
        if (truth > flipped) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

RunMetrics train_link(const TrainConfig& config, const ModelSpec& spec, const LinkProblem& problem,
                      std::uint64_t seed) {
    const Rng root(seed);
    Rng init = root.stream(streams::init);
    LinkModel model(spec, problem.features.cols(), init);
    const GraphContext gc = make_context(problem.task.undirected, spec, sparsify_seed(seed));
    if (gc.graph->vertex_count() != problem.features.rows()) {
        fail(ErrorCode::shape_mismatch, "graph and feature sizes differ");
    }
    const LinkLabels labels = make_link_labels(*gc.graph, problem.task);

    auto forward = [&](Tape& tape, ForwardContext& ctx, double keep) {
        if (!spec.attention_dropout) ctx.attention_keep = 1.0;
        return model.forward(tape, tape.constant(problem.features), gc, ctx, keep);
    };
    auto train_loss = [&](Var logits) { return masked_softmax_cross_entropy(logits, labels.labels, labels.train_rows); };
    auto evaluate = [&](const Tensor& logits) {
        Evaluation e;
        e.train_acc = edge_direction_accuracy(logits, labels.train_pairs);
        e.val_loss = masked_cross_entropy_value(logits, labels.labels, labels.val_rows);
        e.val_acc = edge_direction_accuracy(logits, labels.val_pairs);
        e.test_acc = edge_direction_accuracy(logits, labels.test_pairs);
        return e;
    };
    return fit(config, model, seed, root.stream(streams::dropout), forward, train_loss, evaluate, nullptr);
}

std::size_t count_params(const ModelSpec& spec, std::size_t in_width, std::size_t classes) {
    Rng init(0);
    if (spec.task == Task::link_direction) return LinkModel(spec, in_width, init).parameter_count();
    return VertexModel(spec, in_width, classes, init).parameter_count();
}

std::pair<double, double> mean_std(std::vector<double> values) {
    if (values.empty()) return {0.0, 0.0};
    // Sorting fixes the summation order, so the result does not depend on the
    // order the values arrived in.
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

SweepSummary run_sweep(const std::vector<std::uint64_t>& seeds, const std::function<RunMetrics(std::uint64_t)>& run,
                       std::size_t jobs, bool continue_on_failure) {
    if (seeds.empty()) fail(ErrorCode::invalid_config, "sweep needs at least one seed");
    std::vector<std::uint64_t> order = seeds;
    std::sort(order.begin(), order.end());

    std::vector<RunMetrics> results(order.size());
    std::vector<std::exception_ptr> errors(order.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < order.size(); i = next++) {
            try {
                results[i] = run(order[i]);
                results[i].seed = order[i];
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, order.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    SweepSummary s;
    std::vector<double> accs;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (errors[i]) {
            std::string what = "unknown error";
            ErrorCode code = ErrorCode::invalid_config;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const Error& e) {
                what = e.what();
                code = e.code();
            } catch (const std::exception& e) {
                what = e.what();
            }
            if (!continue_on_failure) throw Error(code, "run with seed " + std::to_string(order[i]) + " failed: " + what);
            RunMetrics failed;
            failed.seed = order[i];
            failed.failed = true;
            failed.error = what;
            s.runs.push_back(std::move(failed));
            ++s.failures;
            continue;
        }
        accs.push_back(results[i].test_acc);
        s.runs.push_back(std::move(results[i]));
    }
    std::tie(s.mean_test_acc, s.std_test_acc) = mean_std(accs);
    return s;
}

json to_json(const SweepSummary& s, bool timestamps) {
    json runs = json::array();
    for (const RunMetrics& m : s.runs) runs.push_back(to_json(m, timestamps));
    return {{"mean_test_acc", s.mean_test_acc},
            {"std_test_acc", s.std_test_acc},
            {"failures", s.failures},
            {"runs", runs}};
}

}  // namespace dpgcnn
