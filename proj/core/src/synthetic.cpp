#include "dpgcnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dpgcnn/error.hpp"

namespace dpgcnn {

DirectedGraph random_digraph(std::size_t n, std::size_t arcs, Rng& rng) {
    std::vector<Arc> out;
    if (n >= 2) {
        out.reserve(arcs);
        for (std::size_t k = 0; k < arcs; ++k) {
            const auto s = static_cast<vertex_id>(rng.below(n));
            auto d = static_cast<vertex_id>(rng.below(n - 1));
            if (d >= s) ++d;
            out.push_back({s, d});
        }
    }
    return from_edge_list(out, n);
}

DirectedGraph random_undirected(std::size_t n, std::size_t edges, Rng& rng) {
    return to_bidirected(random_digraph(n, edges, rng));
}

DirectedGraph random_connected_bidirected(std::size_t n, std::size_t extra, Rng& rng) {
    std::vector<Arc> arcs;
    for (std::size_t v = 1; v < n; ++v) {
        arcs.push_back({static_cast<vertex_id>(rng.below(v)), static_cast<vertex_id>(v)});
    }
    for (std::size_t k = 0; k < extra && n >= 2; ++k) {
        const auto s = static_cast<vertex_id>(rng.below(n));
        auto d = static_cast<vertex_id>(rng.below(n - 1));
        if (d >= s) ++d;
        arcs.push_back({s, d});
    }
    return to_bidirected(from_edge_list(arcs, n));
}

namespace {

void finish_index(ContentTable& t) {
    t.index.clear();
    for (std::size_t i = 0; i < t.ids.size(); ++i) t.index.emplace(t.ids[i], static_cast<std::uint32_t>(i));
}

}  // namespace

SyntheticVertexData two_cluster_graph(std::size_t per_class, std::uint64_t seed) {
    if (per_class < 5) fail(ErrorCode::invalid_config, "two_cluster_graph needs at least 5 vertices per class");
    Rng rng = Rng(seed).stream(streams::synthetic);
    const std::size_t n = 2 * per_class;
    const std::size_t q = 4;
    SyntheticVertexData d;
    d.content.class_names = {"a", "b"};
    d.content.features = Tensor(n, q);
    for (std::size_t v = 0; v < n; ++v) {
        const int c = v < per_class ? 0 : 1;
        d.content.ids.push_back("v" + std::to_string(v));
        d.content.labels.push_back(c);
        d.content.features(v, 0) = (c == 0 ? 1.0 : -1.0) + rng.uniform(-0.5, 0.5);
        for (std::size_t k = 1; k < q; ++k) d.content.features(v, k) = rng.uniform(-1.0, 1.0);
    }
    finish_index(d.content);

    std::vector<Arc> arcs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same = (i < per_class) == (j < per_class);
            if (rng.bernoulli(same ? 0.5 : 0.02)) arcs.push_back({static_cast<vertex_id>(i), static_cast<vertex_id>(j)});
        }
    }
    d.graph = to_bidirected(from_edge_list(arcs, n));

    for (std::size_t c = 0; c < 2; ++c) {
        const auto base = static_cast<std::uint32_t>(c * per_class);
        d.split.train.insert(d.split.train.end(), {base, base + 1});
        d.split.val.insert(d.split.val.end(), {base + 2, base + 3});
        for (std::uint32_t v = base + 4; v < base + per_class; ++v) d.split.test.push_back(v);
    }
    return d;
}

CitationDataset planted_direction_graph(std::size_t n, std::size_t arcs, std::size_t noise_features,
                                        std::uint64_t seed) {
    Rng rng = Rng(seed).stream(streams::synthetic);
    CitationDataset d;
    d.name = "planted";
    const std::size_t q = 1 + noise_features;
    d.content.features = Tensor(n, q);
    d.content.class_names = {"x"};
    std::vector<double> score(n);
    for (std::size_t v = 0; v < n; ++v) {
        score[v] = rng.uniform(-1.0, 1.0);
        d.content.ids.push_back("p" + std::to_string(v));
        d.content.labels.push_back(0);
        d.content.features(v, 0) = score[v];
        for (std::size_t k = 1; k < q; ++k) d.content.features(v, k) = rng.uniform(-1.0, 1.0);
    }
    finish_index(d.content);
    std::vector<Arc> out;
    for (std::size_t k = 0; k < arcs; ++k) {
        const auto a = static_cast<vertex_id>(rng.below(n));
        auto b = static_cast<vertex_id>(rng.below(n - 1));
        if (b >= a) ++b;
        out.push_back(score[a] > score[b] ? Arc{a, b} : Arc{b, a});
    }
    d.graph = from_edge_list(out, n);
    d.stats.arcs = d.graph.arc_count();
    d.stats.undirected_edges = d.graph.undirected_edge_count();
    return d;
}

CitationDataset citation_like_graph(const CitationLikeSpec& spec, std::uint64_t seed) {
    if (spec.papers < 2 || spec.topics == 0 || spec.eras == 0) {
        fail(ErrorCode::invalid_config, "citation_like_graph needs papers >= 2 and nonzero topics and eras");
    }
    Rng rng = Rng(seed).stream(streams::synthetic);
    const std::size_t n = spec.papers;
    const std::size_t topic_words = spec.topics * spec.words_per_topic;
    const std::size_t era_words = spec.eras * spec.words_per_era;
    const std::size_t q = topic_words + era_words + spec.background_words;

    CitationDataset d;
    d.name = "citation_like";
    d.content.features = Tensor(n, q);
    for (std::size_t t = 0; t < spec.topics; ++t) d.content.class_names.push_back("topic" + std::to_string(t));
    std::vector<std::size_t> topic(n);
    for (std::size_t v = 0; v < n; ++v) {
        topic[v] = static_cast<std::size_t>(rng.below(spec.topics));
        const std::size_t era = v * spec.eras / n;
        d.content.ids.push_back("paper" + std::to_string(v));
        d.content.labels.push_back(static_cast<int>(topic[v]));
        for (std::size_t w = 0; w < spec.doc_length; ++w) {
            const double u = rng.uniform();
            std::size_t word;
            if (u < spec.era_word_share) {
                // Vocabulary drifts: mostly the paper's era, sometimes a neighbor.
                std::size_t e = era;
                const double shift = rng.uniform();
                if (shift < 0.15 && e > 0) --e;
                if (shift > 0.85 && e + 1 < spec.eras) ++e;
                word = topic_words + e * spec.words_per_era + static_cast<std::size_t>(rng.below(spec.words_per_era));
            } else if (u < spec.era_word_share + 0.5) {
                word = topic[v] * spec.words_per_topic + static_cast<std::size_t>(rng.below(spec.words_per_topic));
            } else {
                word = topic_words + era_words + static_cast<std::size_t>(rng.below(spec.background_words));
            }
            d.content.features(v, word) = 1.0;
        }
    }
    finish_index(d.content);

    std::vector<Arc> arcs;
    std::vector<double> cited(n, 0.0);
    for (std::size_t v = 1; v < n; ++v) {
        const std::size_t refs = 1 + static_cast<std::size_t>(rng.below(2 * spec.mean_references - 1));
        for (std::size_t r = 0; r < refs; ++r) {
            const bool same = rng.bernoulli(spec.same_topic);
            // Preferential attachment over earlier papers matching the topic rule.
            double total = 0.0;
            for (std::size_t u = 0; u < v; ++u) {
                if ((topic[u] == topic[v]) == same) total += 1.0 + cited[u];
            }
            if (total == 0.0) continue;
            double pick = rng.uniform() * total;
            for (std::size_t u = 0; u < v; ++u) {
                if ((topic[u] == topic[v]) != same) continue;
                pick -= 1.0 + cited[u];
                if (pick <= 0.0) {
                    arcs.push_back({static_cast<vertex_id>(v), static_cast<vertex_id>(u)});
                    cited[u] += 1.0;
                    break;
                }
            }
        }
    }
    d.graph = from_edge_list(arcs, n);
    d.stats.lines = arcs.size();
    d.stats.kept_lines = arcs.size();
    d.stats.arcs = d.graph.arc_count();
    d.stats.duplicates = arcs.size() - d.graph.arc_count();
    d.stats.undirected_edges = d.graph.undirected_edge_count();
    return d;
}

}  // namespace dpgcnn
