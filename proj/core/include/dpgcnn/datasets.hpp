#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dpgcnn/graph.hpp"
#include "dpgcnn/tensor.hpp"

namespace dpgcnn {

/// Vertex ids, binary bag-of-words features and class labels of a citation
/// network in the `id<TAB>w_1 .. w_q<TAB>label` layout.
struct ContentTable {
    std::vector<std::string> ids;
    Tensor features;
    std::vector<int> labels;
    /// Sorted class names; labels index into this table.
    std::vector<std::string> class_names;
    std::unordered_map<std::string, std::uint32_t> index;

    std::size_t size() const noexcept { return ids.size(); }
    std::size_t class_count() const noexcept { return class_names.size(); }
    std::optional<std::uint32_t> find(const std::string& id) const;

    friend bool operator==(const ContentTable& a, const ContentTable& b) {
        return a.ids == b.ids && a.features == b.features && a.labels == b.labels && a.class_names == b.class_names;
    }
};

/// Throws MalformedLine (with the 1-based line number) or InconsistentWidth.
ContentTable parse_content(std::istream& in);
ContentTable load_content(const std::filesystem::path& path);
/// Writes the same layout back; features print with full precision.
void write_content(std::ostream& out, const ContentTable& table);

struct CitesStats {
    std::size_t lines = 0;
    /// Distinct directed arcs kept.
    std::size_t arcs = 0;
    /// Lines whose (citing, cited) pair was kept, duplicates included.
    std::size_t kept_lines = 0;
    std::size_t duplicates = 0;
    std::size_t self_citations = 0;
    std::size_t unknown_ids = 0;
    /// Distinct unordered pairs {i, j}.
    std::size_t undirected_edges = 0;
};

/// Reads `cited<TAB>citing` lines into arcs citing -> cited over the content
/// table's vertex numbering. Self-citations and unknown ids are skipped and
/// counted; repeated arcs are merged.
DirectedGraph parse_cites(std::istream& in, const ContentTable& content, CitesStats* stats = nullptr);
DirectedGraph load_cites(const std::filesystem::path& path, const ContentTable& content,
                         CitesStats* stats = nullptr);

/// Divides each nonzero row by its L1 norm.
Tensor row_normalize(const Tensor& features);

struct Split {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> val;
    std::vector<std::uint32_t> test;
};

/// Throws OverlappingSplits if any vertex is in two sets.
void check_disjoint(const Split& split, std::size_t n);

/// `{"train":[ids],"val":[ids],"test":[ids]}` with string ids. Throws
/// UnknownId or OverlappingSplits.
Split split_from_json(const nlohmann::json& j, const ContentTable& content);
Split load_split(const std::filesystem::path& path, const ContentTable& content);
nlohmann::json split_to_json(const Split& split, const ContentTable& content);

struct SampledSplitSpec {
    std::size_t train = 140;
    std::size_t val = 500;
    std::size_t test = 1000;
    /// Balance the training set over classes; validation and test are drawn
    /// uniformly from the rest.
    bool per_class = false;
};

/// Draws a split with Rng(seed).stream(split). Throws InvalidConfig if the
/// sizes exceed the vertex count.
Split sample_split(const ContentTable& content, const SampledSplitSpec& spec, std::uint64_t seed);

struct LinkTask {
    /// Bidirected, loop-free graph the models see.
    DirectedGraph undirected;
    /// Labeled edges in their true orientation.
    std::vector<Arc> train;
    std::vector<Arc> val;
    std::vector<Arc> test;
    /// Edges that carry a direction (no reciprocal arc).
    std::size_t labelable_edges = 0;
    /// Reciprocal pairs (i,j),(j,i) left unlabeled.
    std::size_t reciprocal_pairs = 0;
    std::uint64_t seed = 0;
};

struct LinkFractions {
    double train = 0.1;
    double val = 0.1;
    double test = 0.1;
};

/// Samples floor(fraction * labelable) edges per set, disjoint, with
/// Rng(seed).stream(link_task). Throws TooFewEdges if a set comes out empty.
LinkTask make_link_task(const DirectedGraph& g, LinkFractions fractions, std::uint64_t seed);

struct CitationDataset {
    std::string name;
    ContentTable content;
    /// Directed citation arcs (citing -> cited).
    DirectedGraph graph;
    CitesStats stats;
};

/// Loads `<dir>/<name>.content` and `<dir>/<name>.cites`.
CitationDataset load_citation_dataset(const std::filesystem::path& dir, const std::string& name);

/// Dataset root: `override_dir` if non-empty, else $DPGCNN_DATA_DIR, else "data".
std::filesystem::path data_root(const std::string& override_dir = {});

}  // namespace dpgcnn
