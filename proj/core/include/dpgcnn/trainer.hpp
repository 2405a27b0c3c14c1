#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpgcnn/datasets.hpp"
#include "dpgcnn/model.hpp"
#include "dpgcnn/tensor.hpp"

namespace dpgcnn {

struct TrainConfig {
    double lr = 0.005;
    double weight_decay = 5e-4;
    /// Keep probability at every dropout site of the model spec.
    double dropout_keep = 0.4;
    std::size_t max_epochs = 1000;
    std::size_t patience = 100;
    std::vector<std::uint64_t> seeds{0};

    static TrainConfig vertex_defaults() { return {}; }
    static TrainConfig link_defaults() { return {0.01, 0.0, 0.9, 500, 50, {0}}; }
};

/// Throws InvalidConfig unless 0 < dropout_keep <= 1 and patience <= max_epochs.
void validate(const TrainConfig& config);

struct EpochRecord {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct RunMetrics {
    std::uint64_t seed = 0;
    std::vector<EpochRecord> epochs;
    /// 1-based epoch whose weights were kept; 0 means the initial weights.
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    double best_val_acc = 0.0;
    double test_acc = 0.0;
    std::size_t params = 0;
    double wall_ms = 0.0;
    bool failed = false;
    std::string error;
};

nlohmann::json to_json(const RunMetrics& m, bool timestamps = true);

/// Everything a vertex-classification run needs.
struct VertexProblem {
    Tensor features;
    std::vector<int> labels;
    std::size_t classes = 0;
    /// Graph the model runs on, typically bidirected.
    DirectedGraph graph;
    Split split;
};

/// Builds a problem from a citation dataset: bidirected graph, optionally
/// row-normalized features.
VertexProblem make_vertex_problem(const CitationDataset& data, const Split& split, bool normalize = true);

/// Weights of the selected epoch, in model parameter order.
using Weights = std::vector<Tensor>;

/// Full-batch training with early stopping on validation loss/accuracy and
/// restoration of the best epoch. Throws DivergedLoss on a non-finite loss.
RunMetrics train_vertex(const TrainConfig& config, const ModelSpec& spec, const VertexProblem& problem,
                        std::uint64_t seed, Weights* best = nullptr);

/// Test accuracy of a model with the given weights (freshly initialized
/// from `seed` if `weights` is empty).
double evaluate_vertex(const ModelSpec& spec, const VertexProblem& problem, std::uint64_t seed,
                       const Weights& weights = {});

struct LinkProblem {
    Tensor features;
    LinkTask task;
};

/// Builds the per-seed link task (10/10/10 by default) over `data.graph`.
LinkProblem make_link_problem(const CitationDataset& data, std::uint64_t seed, LinkFractions fractions = {},
                              bool normalize = true);

/// Per-row labels for the arcs of a model's graph. Row a is labeled 1 when
/// arc a points the way the original edge did.
struct LinkLabels {
    std::vector<int> labels;
    std::vector<std::uint32_t> train_rows;
    std::vector<std::uint32_t> val_rows;
    std::vector<std::uint32_t> test_rows;
    /// (true arc, reverse arc) rows per edge.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> train_pairs;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> val_pairs;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> test_pairs;
};
LinkLabels make_link_labels(const DirectedGraph& model_graph, const LinkTask& task);

/// Fraction of edges whose two orientations, scored jointly, pick the true
/// direction: log p(a=1) + log p(b=0) > log p(a=0) + log p(b=1).
double edge_direction_accuracy(const Tensor& logits,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs);

RunMetrics train_link(const TrainConfig& config, const ModelSpec& spec, const LinkProblem& problem,
                      std::uint64_t seed);

/// Parameter count of a freshly built model.
std::size_t count_params(const ModelSpec& spec, std::size_t in_width, std::size_t classes);

struct SweepSummary {
    double mean_test_acc = 0.0;
    /// Population standard deviation over successful runs.
    double std_test_acc = 0.0;
    std::size_t failures = 0;
    /// Sorted by seed.
    std::vector<RunMetrics> runs;
};

/// Runs `run(seed)` for every seed on up to `jobs` threads. Aggregates are
/// independent of seed order. A failing run rethrows with its seed attached
/// unless `continue_on_failure`, in which case it is recorded and skipped.
SweepSummary run_sweep(const std::vector<std::uint64_t>& seeds, const std::function<RunMetrics(std::uint64_t)>& run,
                       std::size_t jobs = 1, bool continue_on_failure = false);

nlohmann::json to_json(const SweepSummary& s, bool timestamps = true);

/// Mean and population standard deviation.
std::pair<double, double> mean_std(std::vector<double> values);

}  // namespace dpgcnn
