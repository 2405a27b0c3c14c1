#include "dpgcnn/edge_list.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <unordered_map>

#include "dpgcnn/error.hpp"
#include "dpgcnn/text.hpp"

namespace dpgcnn {

namespace {

// Larger integer ids are remapped densely like string ids.
constexpr std::uint64_t max_numeric_id = 1ull << 24;

bool parse_uint(std::string_view s, std::uint64_t& value) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

EdgeListFile parse_edge_list(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> raw;
    std::string line;
    std::size_t line_no = 0;
    bool all_numeric = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = split(view, '\t');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            fail(ErrorCode::malformed_line,
                 "line " + std::to_string(line_no) + ": expected 'src<TAB>dst'");
        }
        std::uint64_t a = 0;
        std::uint64_t b = 0;
        if (!parse_uint(fields[0], a) || !parse_uint(fields[1], b) || std::max(a, b) >= max_numeric_id) {
            all_numeric = false;
        }
        raw.emplace_back(std::string(fields[0]), std::string(fields[1]));
    }

    EdgeListFile out;
    out.arcs.reserve(raw.size());
    if (all_numeric) {
        std::uint64_t max_id = 0;
        bool any = false;
        for (const auto& [s, d] : raw) {
            std::uint64_t a = 0;
            std::uint64_t b = 0;
            parse_uint(s, a);
            parse_uint(d, b);
            out.arcs.push_back({static_cast<vertex_id>(a), static_cast<vertex_id>(b)});
            max_id = std::max({max_id, a, b});
            any = true;
        }
        out.vertex_count = any ? static_cast<std::size_t>(max_id) + 1 : 0;
        out.labels.reserve(out.vertex_count);
        for (std::size_t v = 0; v < out.vertex_count; ++v) out.labels.push_back(std::to_string(v));
        return out;
    }

    out.string_ids = true;
    std::unordered_map<std::string, vertex_id> ids;
    auto intern = [&](const std::string& label) {
        auto [it, inserted] = ids.try_emplace(label, static_cast<vertex_id>(out.labels.size()));
        if (inserted) out.labels.push_back(label);
        return it->second;
    };
    for (const auto& [s, d] : raw) {
        const vertex_id a = intern(s);
        const vertex_id b = intern(d);
        out.arcs.push_back({a, b});
    }
    out.vertex_count = out.labels.size();
    return out;
}

EdgeListFile read_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path.string() + "'");
    return parse_edge_list(in);
}

void write_dual_edge_list(std::ostream& out, const DualGraph& d) {
    for (std::uint32_t u = 0; u < d.vertex_count(); ++u) {
        for (std::uint32_t v : d.neighbors(u)) {
            if (u < v) out << u << '\t' << v << '\n';
        }
    }
}

void write_dual_vertex_table(std::ostream& out, const DualGraph& d, const std::vector<std::string>& labels) {
    const DirectedGraph& g = *d.primal;
    for (std::uint32_t u = 0; u < d.vertex_count(); ++u) {
        const Arc& a = g.arc(d.vertex_arc[u]);
        out << u << '\t' << labels.at(a.src) << '\t' << labels.at(a.dst) << '\n';
    }
}

}  // namespace dpgcnn
