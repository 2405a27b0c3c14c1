#include "dpgcnn/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "dpgcnn/error.hpp"
#include "dpgcnn/rng.hpp"
#include "dpgcnn/text.hpp"

namespace dpgcnn {

using nlohmann::json;

std::optional<std::uint32_t> ContentTable::find(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

namespace {

std::string line_error(std::size_t line, const std::string& what) {
    return "line " + std::to_string(line) + ": " + what;
}

std::vector<std::string_view> fields_of(std::string_view line) {
    // Tabs are canonical; fall back to whitespace for hand-written files.
    if (line.find('\t') != std::string_view::npos) return split(line, '\t');
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::ifstream open_or_fail(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

ContentTable parse_content(std::istream& in) {
    ContentTable t;
    std::vector<double> values;
    std::vector<std::string> raw_labels;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        const auto f = fields_of(s);
        if (f.size() < 2) fail(ErrorCode::malformed_line, line_error(line_no, "expected id, features and label"));
        const std::size_t q = f.size() - 2;
        if (t.ids.empty()) {
            width = q;
        } else if (q != width) {
            fail(ErrorCode::inconsistent_width, line_error(line_no, "row has " + std::to_string(q) +
                                                                        " features, expected " + std::to_string(width)));
        }
        std::string id(trim(f.front()));
        if (t.index.contains(id)) fail(ErrorCode::malformed_line, line_error(line_no, "duplicate id '" + id + "'"));
        for (std::size_t k = 1; k + 1 < f.size(); ++k) {
            const std::string_view tok = trim(f[k]);
            double v = 0.0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
                fail(ErrorCode::malformed_line, line_error(line_no, "bad feature '" + std::string(tok) + "'"));
            }
            values.push_back(v);
        }
        t.index.emplace(id, static_cast<std::uint32_t>(t.ids.size()));
        t.ids.push_back(std::move(id));
        raw_labels.emplace_back(trim(f.back()));
    }
    std::set<std::string> names(raw_labels.begin(), raw_labels.end());
    t.class_names.assign(names.begin(), names.end());
    std::map<std::string, int> class_of;
    for (std::size_t c = 0; c < t.class_names.size(); ++c) class_of[t.class_names[c]] = static_cast<int>(c);
    for (const std::string& l : raw_labels) t.labels.push_back(class_of[l]);
    t.features = Tensor(t.ids.size(), width, std::move(values));
    return t;
}

ContentTable load_content(const std::filesystem::path& path) {
    std::ifstream in = open_or_fail(path);
    return parse_content(in);
}

void write_content(std::ostream& out, const ContentTable& table) {
    const auto old = out.precision(17);
    for (std::size_t r = 0; r < table.size(); ++r) {
        out << table.ids[r];
        for (double v : table.features.row(r)) out << '\t' << v;
        out << '\t' << table.class_names[static_cast<std::size_t>(table.labels[r])] << '\n';
    }
    out.precision(old);
}

DirectedGraph parse_cites(std::istream& in, const ContentTable& content, CitesStats* stats) {
    CitesStats st;
    std::vector<Arc> arcs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        const auto f = fields_of(s);
        if (f.size() != 2) fail(ErrorCode::malformed_line, line_error(line_no, "expected 'cited<TAB>citing'"));
        ++st.lines;
        const auto cited = content.find(std::string(trim(f[0])));
        const auto citing = content.find(std::string(trim(f[1])));
        if (!cited || !citing) {
            ++st.unknown_ids;
            continue;
        }
        if (*cited == *citing) {
            ++st.self_citations;
            continue;
        }
        arcs.push_back({*citing, *cited});
    }
    st.kept_lines = arcs.size();
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
    st.duplicates = st.kept_lines - arcs.size();
    st.arcs = arcs.size();
    DirectedGraph g = from_edge_list(arcs, content.size());
    st.undirected_edges = g.undirected_edge_count();
    if (stats != nullptr) *stats = st;
    return g;
}

DirectedGraph load_cites(const std::filesystem::path& path, const ContentTable& content, CitesStats* stats) {
    std::ifstream in = open_or_fail(path);
    return parse_cites(in, content, stats);
}

Tensor row_normalize(const Tensor& features) {
    Tensor out = features;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        double norm = 0.0;
        for (double v : row) norm += std::abs(v);
        if (norm == 0.0) continue;
        for (double& v : row) v /= norm;
    }
    return out;
}

void check_disjoint(const Split& split, std::size_t n) {
    std::vector<std::uint8_t> owner(n, 0);
    auto mark = [&](const std::vector<std::uint32_t>& ids, std::uint8_t tag, const char* name) {
        for (std::uint32_t v : ids) {
            if (v >= n) fail(ErrorCode::unknown_id, "vertex " + std::to_string(v) + " in " + name + " is out of range");
            if (owner[v] != 0) {
                fail(ErrorCode::overlapping_splits, "vertex " + std::to_string(v) + " appears in more than one split (" +
                                                        name + ")");
            }
            owner[v] = tag;
        }
    };
    mark(split.train, 1, "train");
    mark(split.val, 2, "val");
    mark(split.test, 3, "test");
}

Split split_from_json(const json& j, const ContentTable& content) {
    Split s;
    auto read = [&](const char* key, std::vector<std::uint32_t>& out) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_array()) fail(ErrorCode::invalid_config, std::string("split needs array '") + key + "'");
        for (const json& v : *it) {
            const std::string id = v.is_string() ? v.get<std::string>() : v.dump();
            const auto idx = content.find(id);
            if (!idx) fail(ErrorCode::unknown_id, std::string("split '") + key + "' names unknown id '" + id + "'");
            out.push_back(*idx);
        }
    };
    read("train", s.train);
    read("val", s.val);
    read("test", s.test);
    check_disjoint(s, content.size());
    return s;
}

Split load_split(const std::filesystem::path& path, const ContentTable& content) {
    std::ifstream in = open_or_fail(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::malformed_line, "split file '" + path.string() + "': " + e.what());
    }
    return split_from_json(j, content);
}

json split_to_json(const Split& split, const ContentTable& content) {
    auto ids = [&](const std::vector<std::uint32_t>& v) {
        json a = json::array();
        for (std::uint32_t i : v) a.push_back(content.ids[i]);
        return a;
    };
    return {{"train", ids(split.train)}, {"val", ids(split.val)}, {"test", ids(split.test)}};
}

Split sample_split(const ContentTable& content, const SampledSplitSpec& spec, std::uint64_t seed) {
    const std::size_t n = content.size();
    if (spec.train + spec.val + spec.test > n) {
        fail(ErrorCode::invalid_config, "split sizes " + std::to_string(spec.train) + "/" + std::to_string(spec.val) +
                                            "/" + std::to_string(spec.test) + " exceed " + std::to_string(n) +
                                            " vertices");
    }
    Rng rng = Rng(seed).stream(streams::split);
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span<std::uint32_t>(order));

    Split s;
    std::vector<bool> used(n, false);
    if (spec.per_class && content.class_count() > 0) {
        const std::size_t classes = content.class_count();
        std::vector<std::size_t> quota(classes, spec.train / classes);
        for (std::size_t c = 0; c < spec.train % classes; ++c) ++quota[c];
        for (std::uint32_t v : order) {
            const auto c = static_cast<std::size_t>(content.labels[v]);
            if (quota[c] == 0) continue;
            --quota[c];
            s.train.push_back(v);
            used[v] = true;
        }
        // Classes too small for their quota are topped up uniformly.
        for (std::uint32_t v : order) {
            if (s.train.size() >= spec.train) break;
            if (used[v]) continue;
            s.train.push_back(v);
            used[v] = true;
        }
    } else {
        for (std::size_t k = 0; k < spec.train; ++k) {
            s.train.push_back(order[k]);
            used[order[k]] = true;
        }
    }
    for (std::uint32_t v : order) {
        if (used[v]) continue;
        if (s.val.size() < spec.val) {
            s.val.push_back(v);
        } else if (s.test.size() < spec.test) {
            s.test.push_back(v);
        } else {
            break;
        }
        used[v] = true;
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

LinkTask make_link_task(const DirectedGraph& g, LinkFractions fractions, std::uint64_t seed) {
    const DirectedGraph loop_free = remove_self_loops(g);
    LinkTask task;
    task.seed = seed;
    std::vector<Arc> labelable;
    for (const Arc& a : loop_free.arcs()) {
        if (loop_free.find_arc(a.dst, a.src)) {
            if (a.src < a.dst) ++task.reciprocal_pairs;
            continue;
        }
        labelable.push_back(a);
    }
    task.labelable_edges = labelable.size();
    auto count = [&](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(labelable.size()))); };
    const std::size_t n_train = count(fractions.train);
    const std::size_t n_val = count(fractions.val);
    const std::size_t n_test = count(fractions.test);
    if (n_train == 0 || n_val == 0 || n_test == 0 || n_train + n_val + n_test > labelable.size()) {
        fail(ErrorCode::too_few_edges, std::to_string(labelable.size()) + " labelable edges give an empty split (" +
                                           std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                                           std::to_string(n_test) + ")");
    }
    Rng rng = Rng(seed).stream(streams::link_task);
    rng.shuffle(std::span<Arc>(labelable));
    auto take = [&](std::size_t begin, std::size_t count_) {
        std::vector<Arc> out(labelable.begin() + static_cast<std::ptrdiff_t>(begin),
                             labelable.begin() + static_cast<std::ptrdiff_t>(begin + count_));
        std::sort(out.begin(), out.end());
        return out;
    };
    task.train = take(0, n_train);
    task.val = take(n_train, n_val);
    task.test = take(n_train + n_val, n_test);
    task.undirected = to_bidirected(loop_free);
    return task;
}

CitationDataset load_citation_dataset(const std::filesystem::path& dir, const std::string& name) {
    CitationDataset d;
    d.name = name;
    d.content = load_content(dir / (name + ".content"));
    d.graph = load_cites(dir / (name + ".cites"), d.content, &d.stats);
    return d;
}

std::filesystem::path data_root(const std::string& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (const char* env = std::getenv("DPGCNN_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return "data";
}

}  // namespace dpgcnn
