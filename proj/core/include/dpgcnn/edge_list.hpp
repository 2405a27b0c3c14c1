#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpgcnn/dual.hpp"
#include "dpgcnn/graph.hpp"

namespace dpgcnn {

/// Arcs read from a `src<TAB>dst` file. When every id is a non-negative
/// decimal integer the ids are used as-is; otherwise ids are treated as opaque
/// strings and numbered densely in first-seen order.
struct EdgeListFile {
    std::vector<Arc> arcs;
    std::size_t vertex_count = 0;
    bool string_ids = false;
    /// Label of each dense vertex id.
    std::vector<std::string> labels;
};

/// Blank lines and lines starting with '#' are skipped. Throws MalformedLine
/// naming the 1-based line number.
EdgeListFile parse_edge_list(std::istream& in);
EdgeListFile read_edge_list(const std::filesystem::path& path);

/// One undirected dual edge per line, `u<TAB>v` with u < v (dual vertex ids).
void write_dual_edge_list(std::ostream& out, const DualGraph& d);

/// `dual_id<TAB>src_label<TAB>dst_label` for every dual vertex.
void write_dual_vertex_table(std::ostream& out, const DualGraph& d, const std::vector<std::string>& labels);

}  // namespace dpgcnn
