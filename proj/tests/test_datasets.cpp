#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dpgcnn/datasets.hpp"
#include "dpgcnn/error.hpp"
#include "dpgcnn/synthetic.hpp"

using namespace dpgcnn;

namespace {

const char* content_text =
    "p1\t1\t0\t1\tA\n"
    "p2\t0\t1\t0\tB\n"
    "p3\t1\t1\t0\tA\n"
    "p4\t0\t0\t1\tC\n";

ContentTable small_table() {
    std::istringstream in(content_text);
    return parse_content(in);
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::invalid_config;
}

}  // namespace

TEST(Content, ParsesLayout) {
    const ContentTable t = small_table();
    EXPECT_EQ(t.size(), 4u);
    EXPECT_EQ(t.features.cols(), 3u);
    EXPECT_EQ(t.class_names, (std::vector<std::string>{"A", "B", "C"}));
    EXPECT_EQ(t.labels, (std::vector<int>{0, 1, 0, 2}));
    EXPECT_EQ(t.find("p3"), std::optional<std::uint32_t>(2));
    EXPECT_FALSE(t.find("zz").has_value());
}

TEST(Content, RoundTrip) {
    const ContentTable t = small_table();
    std::ostringstream out;
    write_content(out, t);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_content(in), t);
}

TEST(Content, Errors) {
    std::istringstream ragged("a\t1\t0\tX\nb\t1\tY\n");
    EXPECT_EQ(code_of([&] { parse_content(ragged); }), ErrorCode::inconsistent_width);
    std::istringstream bad("a\t1\tq\tX\n");
    EXPECT_EQ(code_of([&] { parse_content(bad); }), ErrorCode::malformed_line);
}

TEST(Cites, DirectionAndCounting) {
    const ContentTable t = small_table();
    // cited<TAB>citing
    std::istringstream in("p1\tp2\np1\tp2\np3\tp3\np1\tghost\np2\tp4\n");
    CitesStats s;
    const DirectedGraph g = parse_cites(in, t, &s);
    EXPECT_EQ(s.lines, 5u);
    EXPECT_EQ(s.duplicates, 1u);
    EXPECT_EQ(s.self_citations, 1u);
    EXPECT_EQ(s.unknown_ids, 1u);
    EXPECT_EQ(s.arcs, 2u);
    EXPECT_TRUE(g.find_arc(1, 0).has_value());  // p2 cites p1
    EXPECT_TRUE(g.find_arc(3, 1).has_value());
    EXPECT_FALSE(g.find_arc(0, 1).has_value());
}

TEST(Features, RowNormalize) {
    const Tensor f = row_normalize(Tensor::from_rows({{1, 1, 2}, {0, 0, 0}}));
    EXPECT_DOUBLE_EQ(f(0, 2), 0.5);
    EXPECT_DOUBLE_EQ(f(1, 0), 0.0);
}

TEST(Splits, JsonAndOverlap) {
    const ContentTable t = small_table();
    const nlohmann::json j = {{"train", {"p1"}}, {"val", {"p2"}}, {"test", {"p3", "p4"}}};
    const Split s = split_from_json(j, t);
    EXPECT_EQ(s.test, (std::vector<std::uint32_t>{2, 3}));
    EXPECT_EQ(split_to_json(s, t), j);
    const nlohmann::json overlap = {{"train", {"p1"}}, {"val", {"p1"}}, {"test", {"p3"}}};
    EXPECT_EQ(code_of([&] { split_from_json(overlap, t); }), ErrorCode::overlapping_splits);
    const nlohmann::json unknown = {{"train", {"nobody"}}, {"val", nlohmann::json::array()}, {"test", {"p3"}}};
    EXPECT_EQ(code_of([&] { split_from_json(unknown, t); }), ErrorCode::unknown_id);
}

TEST(Splits, SampledAreDisjointReproducibleBalanced) {
    const CitationDataset d = citation_like_graph({}, 1);
    const SampledSplitSpec spec{60, 100, 200, true};
    const Split a = sample_split(d.content, spec, 5);
    const Split b = sample_split(d.content, spec, 5);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NO_THROW(check_disjoint(a, d.content.size()));
    EXPECT_EQ(a.train.size(), 60u);
    EXPECT_EQ(a.val.size(), 100u);
    EXPECT_EQ(a.test.size(), 200u);
    std::vector<int> per_class(d.content.class_count(), 0);
    for (auto v : a.train) ++per_class[d.content.labels[v]];
    for (int c : per_class) EXPECT_EQ(c, 10);
    EXPECT_NE(sample_split(d.content, spec, 6).train, a.train);
    EXPECT_EQ(code_of([&] { sample_split(d.content, {700, 100, 100, false}, 1); }), ErrorCode::invalid_config);
}

TEST(LinkTask, SizesAndDisjointness) {
    const CitationDataset d = citation_like_graph({}, 2);
    const LinkTask t = make_link_task(d.graph, {}, 9);
    EXPECT_TRUE(t.undirected.is_bidirected());
    EXPECT_FALSE(t.undirected.has_self_loops());
    EXPECT_EQ(t.undirected.arc_count(), 2 * t.undirected.undirected_edge_count());
    const std::size_t expect = t.labelable_edges / 10;
    EXPECT_EQ(t.train.size(), expect);
    EXPECT_EQ(t.val.size(), expect);
    EXPECT_EQ(t.test.size(), expect);
    std::set<std::pair<vertex_id, vertex_id>> seen;
    for (const auto* set : {&t.train, &t.val, &t.test}) {
        for (const Arc& a : *set) {
            EXPECT_TRUE(d.graph.find_arc(a.src, a.dst).has_value());
            EXPECT_FALSE(d.graph.find_arc(a.dst, a.src).has_value());
            EXPECT_TRUE(seen.insert({std::min(a.src, a.dst), std::max(a.src, a.dst)}).second);
        }
    }
    const LinkTask again = make_link_task(d.graph, {}, 9);
    EXPECT_EQ(again.test, t.test);
}

TEST(LinkTask, TooFewEdges) {
    const std::vector<Arc> arcs{{0, 1}, {1, 2}};
    EXPECT_EQ(code_of([&] { make_link_task(from_edge_list(arcs, 3), {}, 1); }), ErrorCode::too_few_edges);
}

TEST(Loader, ReadsDirectoryAndRespectsEnv) {
    const auto dir = std::filesystem::temp_directory_path() / "dpgcnn_loader_test" / "toy";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "toy.content") << content_text;
    std::ofstream(dir / "toy.cites") << "p1\tp2\np3\tp4\n";
    const CitationDataset d = load_citation_dataset(dir, "toy");
    EXPECT_EQ(d.content.size(), 4u);
    EXPECT_EQ(d.graph.arc_count(), 2u);
    EXPECT_EQ(data_root("/x"), std::filesystem::path("/x"));
    EXPECT_EQ(code_of([&] { load_citation_dataset(dir, "missing"); }), ErrorCode::io_error);
    std::filesystem::remove_all(dir.parent_path());
}

TEST(Synthetic, GeneratorsAreDeterministic) {
    const CitationDataset a = citation_like_graph({}, 3);
    const CitationDataset b = citation_like_graph({}, 3);
    EXPECT_EQ(a.content, b.content);
    EXPECT_EQ(std::vector<Arc>(a.graph.arcs().begin(), a.graph.arcs().end()),
              std::vector<Arc>(b.graph.arcs().begin(), b.graph.arcs().end()));
    const CitationDataset p = planted_direction_graph(40, 100, 2, 1);
    for (const Arc& arc : p.graph.arcs()) EXPECT_GT(p.content.features(arc.src, 0), p.content.features(arc.dst, 0));
    const SyntheticVertexData t = two_cluster_graph(8, 2);
    EXPECT_TRUE(t.graph.is_bidirected());
    EXPECT_NO_THROW(check_disjoint(t.split, 16));
}
