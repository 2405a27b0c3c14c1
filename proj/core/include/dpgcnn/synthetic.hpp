#pragma once

#include <cstddef>
#include <cstdint>

#include "dpgcnn/datasets.hpp"
#include "dpgcnn/graph.hpp"
#include "dpgcnn/rng.hpp"

namespace dpgcnn {

/// Random loop-free digraph with up to `arcs` distinct arcs.
DirectedGraph random_digraph(std::size_t n, std::size_t arcs, Rng& rng);

/// Random undirected graph with up to `edges` edges, returned bidirected.
DirectedGraph random_undirected(std::size_t n, std::size_t edges, Rng& rng);

/// Random spanning tree plus `extra` random edges, bidirected and loop-free,
/// hence weakly connected.
DirectedGraph random_connected_bidirected(std::size_t n, std::size_t extra, Rng& rng);

/// Two classes of `per_class` vertices each. Vertices link densely inside
/// their class and rarely across, and the features are a noisy class
/// indicator, so the classes are separable by construction. Training and
/// validation each take two vertices per class; the rest is test.
struct SyntheticVertexData {
    ContentTable content;
    /// Bidirected.
    DirectedGraph graph;
    Split split;
};
SyntheticVertexData two_cluster_graph(std::size_t per_class, std::uint64_t seed);

/// Digraph whose arcs always run from the vertex with the larger planted
/// score to the smaller one. Feature 0 is the score; the rest is noise.
CitationDataset planted_direction_graph(std::size_t n, std::size_t arcs, std::size_t noise_features,
                                        std::uint64_t seed);

/// Citation-like digraph: papers appear in time order, belong to a topic, and
/// cite earlier papers, preferring same-topic and already well-cited ones.
/// Word features mix topic vocabulary with era vocabulary that drifts over
/// time, so the direction of an edge is only partly visible from its
/// endpoints.
struct CitationLikeSpec {
    std::size_t papers = 800;
    std::size_t topics = 6;
    std::size_t eras = 8;
    std::size_t words_per_topic = 40;
    std::size_t words_per_era = 20;
    std::size_t background_words = 60;
    std::size_t mean_references = 4;
    double same_topic = 0.8;
    /// Words drawn per paper.
    std::size_t doc_length = 18;
    double era_word_share = 0.25;
};
CitationDataset citation_like_graph(const CitationLikeSpec& spec, std::uint64_t seed);

}  // namespace dpgcnn
