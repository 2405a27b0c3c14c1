#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpgcnn/datasets.hpp"
#include "dpgcnn/dual.hpp"
#include "dpgcnn/edge_list.hpp"
#include "dpgcnn/error.hpp"
#include "dpgcnn/gradcheck.hpp"
#include "dpgcnn/model.hpp"
#include "dpgcnn/synthetic.hpp"
#include "dpgcnn/trainer.hpp"

namespace dpgcnn::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::malformed_line:
        case ErrorCode::inconsistent_width:
        case ErrorCode::io_error:
            return parse_error;
        case ErrorCode::diverged_loss:
        case ErrorCode::non_finite_value:
            return divergence;
        default:
            return precondition;
    }
}

/// Thrown for conditions that map straight to an exit code.
struct ExitWith {
    int code;
    std::string message;
};

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ExitWith{parse_error, "cannot open '" + path.string() + "'"};
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ExitWith{parse_error, "'" + path.string() + "' is not valid JSON: " + e.what()};
    }
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw ExitWith{precondition, "cannot write '" + path + "'"};
    f << text;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ExitWith{parse_error, "bad seed '" + item + "'"};
        }
    }
    if (seeds.empty()) throw ExitWith{parse_error, "empty seed list"};
    return seeds;
}

std::string fmt_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct Experiment {
    std::string name;
    Task task = Task::vertex_classification;
    json dataset;
    ModelSpec model;
    TrainConfig train;
    LinkFractions fractions;
};

Experiment experiment_from_json(const json& j) {
    Experiment e;
    try {
        e.name = j.value("name", std::string("experiment"));
        e.task = task_from_string(j.value("task", std::string("vertex_classification")));
        e.dataset = j.value("dataset", json::object());
        json mj = j.value("model", json::object());
        if (!mj.contains("task")) mj["task"] = to_string(e.task);
        e.model = model_spec_from_json(mj);
        if (e.model.task != e.task) fail(ErrorCode::invalid_config, "model task differs from experiment task");
        e.train = e.task == Task::link_direction ? TrainConfig::link_defaults() : TrainConfig::vertex_defaults();
        const json t = j.value("train", json::object());
        e.train.lr = t.value("lr", e.train.lr);
        e.train.weight_decay = t.value("weight_decay", e.train.weight_decay);
        e.train.dropout_keep = t.value("dropout_keep", e.train.dropout_keep);
        e.train.max_epochs = t.value("max_epochs", e.train.max_epochs);
        e.train.patience = t.value("patience", e.train.patience);
        if (t.contains("seeds")) e.train.seeds = t.at("seeds").get<std::vector<std::uint64_t>>();
        if (const json l = j.value("link", json::object()); l.contains("fractions")) {
            const auto f = l.at("fractions").get<std::vector<double>>();
            if (f.size() != 3) fail(ErrorCode::invalid_config, "link.fractions needs three values");
            e.fractions = {f[0], f[1], f[2]};
        }
    } catch (const json::exception& ex) {
        throw ExitWith{parse_error, std::string("config: ") + ex.what()};
    }
    return e;
}

/// Loads the configured dataset: a generator, or `<root>/<name>/<name>.{content,cites}`.
CitationDataset load_dataset(const json& d, const std::string& data_dir, fs::path* dir_out) {
    const std::string name = d.value("name", std::string());
    if (d.contains("generator")) {
        const json g = d.at("generator");
        const std::string kind = g.value("kind", std::string("citation_like"));
        const auto seed = g.value("seed", std::uint64_t{0});
        if (kind == "citation_like") {
            CitationLikeSpec spec;
            spec.papers = g.value("papers", spec.papers);
            spec.topics = g.value("topics", spec.topics);
            spec.eras = g.value("eras", spec.eras);
            spec.mean_references = g.value("mean_references", spec.mean_references);
            return citation_like_graph(spec, seed);
        }
        if (kind == "planted_direction") {
            return planted_direction_graph(g.value("vertices", std::size_t{300}), g.value("arcs", std::size_t{1200}),
                                           g.value("noise_features", std::size_t{4}), seed);
        }
        if (kind == "two_cluster") {
            SyntheticVertexData s = two_cluster_graph(g.value("per_class", std::size_t{10}), seed);
            CitationDataset c;
            c.name = "two_cluster";
            c.content = std::move(s.content);
            c.graph = std::move(s.graph);
            return c;
        }
        fail(ErrorCode::invalid_config, "unknown generator '" + kind + "'");
    }
    if (name.empty()) fail(ErrorCode::invalid_config, "dataset needs a name or a generator");
    const fs::path dir = d.contains("dir") ? fs::path(d.at("dir").get<std::string>()) : data_root(data_dir) / name;
    if (!fs::exists(dir / (name + ".content"))) {
        throw ExitWith{parse_error, "dataset '" + name + "' not found under '" + dir.string() +
                                        "' (set DPGCNN_DATA_DIR or --data-dir)"};
    }
    if (dir_out != nullptr) *dir_out = dir;
    return load_citation_dataset(dir, name);
}

/// Split for one seed: explicit file (same for every seed) or sampled.
Split resolve_split(const json& d, const CitationDataset& data, const fs::path& dir, std::uint64_t seed) {
    if (!d.contains("split")) {
        if (data.name == "two_cluster") {
            return two_cluster_graph(data.content.size() / 2, d.at("generator").value("seed", std::uint64_t{0})).split;
        }
        fail(ErrorCode::invalid_config, "dataset needs a 'split'");
    }
    const json& s = d.at("split");
    if (s.is_string()) return load_split(dir / s.get<std::string>(), data.content);
    if (s.is_object() && s.contains("sampled")) {
        const json& sp = s.at("sampled");
        SampledSplitSpec spec;
        spec.train = sp.value("train", spec.train);
        spec.val = sp.value("val", spec.val);
        spec.test = sp.value("test", spec.test);
        spec.per_class = sp.value("per_class", spec.per_class);
        return sample_split(data.content, spec, seed);
    }
    if (s.is_object()) return split_from_json(s, data.content);
    fail(ErrorCode::invalid_config, "unsupported split specification");
}

json weights_to_json(const Weights& w, std::uint64_t seed) {
    json params = json::array();
    for (const Tensor& t : w) {
        params.push_back({{"rows", t.rows()}, {"cols", t.cols()},
                          {"values", std::vector<double>(t.values().begin(), t.values().end())}});
    }
    return {{"seed", seed}, {"params", params}};
}

Weights weights_from_json(const json& j, std::uint64_t* seed) {
    Weights w;
    try {
        *seed = j.at("seed").get<std::uint64_t>();
        for (const json& p : j.at("params")) {
            w.emplace_back(p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>(),
                           p.at("values").get<std::vector<double>>());
        }
    } catch (const json::exception& e) {
        throw ExitWith{parse_error, std::string("weights file: ") + e.what()};
    }
    return w;
}

// ---------------------------------------------------------------------------
// Subcommands

struct DualizeArgs {
    std::string input;
    std::string mode = "chain";
    std::string out;
    std::string stats;
    std::string vertex_table;
    bool self_loops = false;
    bool bidirect = false;
    std::size_t sparsify = 0;
    std::uint64_t seed = 0;
};

int cmd_dualize(const DualizeArgs& a, std::ostream& out, std::ostream& err) {
    const EdgeListFile file = read_edge_list(a.input);
    const DualMode mode = dual_mode_from_string(a.mode);
    DirectedGraph g = from_edge_list(file.arcs, file.vertex_count);
    // Classic line graphs are defined on undirected edges, one line each.
    if (a.bidirect || mode == DualMode::classic_line_graph) g = to_bidirected(g);
    if (a.self_loops) g = add_self_loops(g);
    DualGraph d = build_dual(std::make_shared<const DirectedGraph>(g), mode);
    if (a.sparsify > 0) d = sparsify_dual(d, a.sparsify, a.seed);
    const DualEdgeCountReport r = count_report(d);

    std::ostringstream tsv;
    write_dual_edge_list(tsv, d);
    json stats = {
        {"mode", to_string(mode)},
        {"n", r.n},
        {"primal_edge_count", r.primal_edge_count},
        {"dual_vertex_count", r.dual_vertex_count},
        {"dual_edge_count_actual", r.dual_edge_count_actual},
        {"dual_edge_count_formula", r.dual_edge_count_formula},
        {"formula_kind", r.formula_kind},
        {"formulas_agree", r.formulas_agree},
        {"primal_connected", connected(g)},
        {"dual_connected", connected(d)},
        {"string_ids", file.string_ids},
    };
    if (d.sparsified_k) stats["sparsified_k"] = *d.sparsified_k;

    if (a.out.empty()) {
        out << tsv.str();
    } else {
        write_output(a.out, tsv.str(), out);
    }
    if (file.string_ids) {
        const std::string map_path = a.out.empty() ? std::string() : a.out + ".ids.json";
        json ids = json::object();
        for (std::size_t i = 0; i < file.labels.size(); ++i) ids[file.labels[i]] = i;
        if (!map_path.empty()) write_output(map_path, ids.dump(2) + "\n", out);
        stats["id_map"] = map_path;
    }
    if (!a.vertex_table.empty()) {
        std::ostringstream vt;
        write_dual_vertex_table(vt, d, file.labels);
        write_output(a.vertex_table, vt.str(), out);
    }
    const std::string stats_text = stats.dump(2) + "\n";
    if (!a.stats.empty()) {
        write_output(a.stats, stats_text, out);
    } else if (!a.out.empty()) {
        out << stats_text;
    } else {
        err << stats_text;
    }
    err << "dual: " << r.dual_vertex_count << " vertices, " << r.dual_edge_count_actual << " edges ("
        << to_string(mode) << "), formula " << r.dual_edge_count_formula
        << (r.formulas_agree ? " agrees" : " differs") << "\n";
    return ok;
}

struct TrainArgs {
    std::string config;
    std::string out;
    std::string seeds;
    std::string data_dir;
    std::string save_weights;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> patience;
    std::optional<double> lr;
    std::optional<double> keep;
    std::size_t jobs = 1;
    bool continue_on_failure = false;
    bool no_timestamps = false;
};

Experiment load_experiment(const TrainArgs& a) {
    Experiment e = experiment_from_json(read_json_file(a.config));
    if (!a.seeds.empty()) e.train.seeds = parse_seed_list(a.seeds);
    if (a.epochs) e.train.max_epochs = *a.epochs;
    if (a.patience) e.train.patience = *a.patience;
    if (a.lr) e.train.lr = *a.lr;
    if (a.keep) e.train.dropout_keep = *a.keep;
    e.train.patience = std::min(e.train.patience, e.train.max_epochs);
    validate(e.train);
    return e;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const Experiment e = load_experiment(a);
    fs::path dir;
    const CitationDataset data = load_dataset(e.dataset, a.data_dir, &dir);
    const bool normalize = e.dataset.value("normalize", true);
    std::size_t params = 0;
    std::function<RunMetrics(std::uint64_t)> run;
    std::optional<Weights> first_weights;
    const std::uint64_t first_seed = *std::min_element(e.train.seeds.begin(), e.train.seeds.end());

    if (e.task == Task::vertex_classification) {
        params = count_params(e.model, data.content.features.cols(), data.content.class_count());
        run = [&](std::uint64_t seed) {
            const VertexProblem p = make_vertex_problem(data, resolve_split(e.dataset, data, dir, seed), normalize);
            Weights w;
            RunMetrics m = train_vertex(e.train, e.model, p, seed, &w);
            if (seed == first_seed && !a.save_weights.empty()) first_weights = std::move(w);
            return m;
        };
    } else {
        params = count_params(e.model, data.content.features.cols(), 2);
        run = [&](std::uint64_t seed) {
            return train_link(e.train, e.model, make_link_problem(data, seed, e.fractions, normalize), seed);
        };
    }
    // Saving weights needs the lowest seed to run in this thread's view.
    const std::size_t jobs = a.save_weights.empty() ? a.jobs : 1;
    const SweepSummary s = run_sweep(e.train.seeds, run, jobs, a.continue_on_failure);
    for (const RunMetrics& m : s.runs) {
        if (m.failed) {
            err << "seed " << m.seed << ": FAILED " << m.error << "\n";
        } else {
            err << "seed " << m.seed << ": test " << fmt_pct(m.test_acc) << "% (best epoch " << m.best_epoch << " of "
                << m.epochs.size() << ")\n";
        }
    }
    json summary = to_json(s, !a.no_timestamps);
    summary["config"] = e.name;
    summary["task"] = to_string(e.task);
    summary["dataset"] = data.name;
    summary["params"] = params;
    summary["model"] = to_json(e.model);
    write_output(a.out, summary.dump(2) + "\n", out);
    if (!a.save_weights.empty() && first_weights) {
        write_output(a.save_weights, weights_to_json(*first_weights, first_seed).dump() + "\n", out);
    }
    err << e.name << ": " << fmt_pct(s.mean_test_acc) << " +- " << fmt_pct(s.std_test_acc) << "% over "
        << (s.runs.size() - s.failures) << " runs, " << params << " params\n";
    return ok;
}

struct EvalArgs {
    std::string config;
    std::string weights;
    std::string out;
    std::string data_dir;
    std::uint64_t seed = 0;
    bool retrain = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    TrainArgs ta;
    ta.config = a.config;
    const Experiment e = load_experiment(ta);
    if (e.task != Task::vertex_classification) {
        throw ExitWith{precondition, "eval supports vertex-classification configs"};
    }
    fs::path dir;
    const CitationDataset data = load_dataset(e.dataset, a.data_dir, &dir);
    std::uint64_t seed = a.seed;
    Weights w;
    if (!a.weights.empty()) w = weights_from_json(read_json_file(a.weights), &seed);
    const VertexProblem p = make_vertex_problem(data, resolve_split(e.dataset, data, dir, seed),
                                                e.dataset.value("normalize", true));
    if (a.retrain) train_vertex(e.train, e.model, p, seed, &w);
    const double acc = evaluate_vertex(e.model, p, seed, w);
    const json j = {{"config", e.name},
                    {"seed", seed},
                    {"weights", a.weights.empty() ? (a.retrain ? "retrained" : "initial") : "file"},
                    {"test_acc", acc}};
    write_output(a.out, j.dump(2) + "\n", out);
    err << e.name << ": test " << fmt_pct(acc) << "%\n";
    return ok;
}

struct GradcheckArgs {
    std::string scope = "all";
    std::size_t cases = 100;
    std::uint64_t seed = 1;
    bool inject_fault = false;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
    GradCheckReport report;
    auto append = [&](const GradCheckReport& r) {
        report.results.insert(report.results.end(), r.results.begin(), r.results.end());
    };
    const bool all = a.scope == "all";
    if (all || a.scope == "ops") append(gradcheck_ops(a.cases, a.seed, a.inject_fault));
    if (all || a.scope == "layers") append(gradcheck_layers(a.cases, a.seed, a.inject_fault));
    if (all || a.scope == "model") append(gradcheck_model(a.cases, a.seed, a.inject_fault));
    out << to_json(report).dump(2) << "\n";
    for (const GradCheckResult& r : report.worst(3)) {
        err << (r.passed() ? "ok   " : "FAIL ") << r.name << " max rel err " << r.max_rel_error << " (threshold "
            << r.threshold << ")\n";
    }
    return report.passed() ? ok : gradcheck_failure;
}

struct InfoArgs {
    std::string dataset;
    std::string edge_list;
    std::string data_dir;
};

int cmd_info(const InfoArgs& a, std::ostream& out, std::ostream&) {
    json j;
    if (!a.edge_list.empty()) {
        const EdgeListFile f = read_edge_list(a.edge_list);
        const DirectedGraph g = from_edge_list(f.arcs, f.vertex_count);
        j = {{"vertices", g.vertex_count()},
             {"arcs", g.arc_count()},
             {"undirected_edges", g.undirected_edge_count()},
             {"bidirected", g.is_bidirected()},
             {"self_loops", g.has_self_loops()},
             {"weakly_connected", connected(g)},
             {"string_ids", f.string_ids}};
    } else if (!a.dataset.empty()) {
        const CitationDataset d = load_dataset(json{{"name", a.dataset}}, a.data_dir, nullptr);
        const DirectedGraph bi = to_bidirected(d.graph);
        j = {{"dataset", d.name},
             {"vertices", d.content.size()},
             {"features", d.content.features.cols()},
             {"classes", d.content.class_count()},
             {"class_names", d.content.class_names},
             {"cites_lines", d.stats.lines},
             {"arcs", d.stats.arcs},
             {"undirected_edges", d.stats.undirected_edges},
             {"bidirected_arcs", bi.arc_count()},
             {"duplicates", d.stats.duplicates},
             {"self_citations", d.stats.self_citations},
             {"unknown_ids", d.stats.unknown_ids},
             {"weakly_connected", connected(d.graph)}};
    } else {
        throw ExitWith{parse_error, "info needs --dataset or --edge-list"};
    }
    out << j.dump(2) << "\n";
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dual-primal graph attention networks"};
    app.name(args.empty() ? "dpgcnn" : args.front());
    app.require_subcommand(1);

    DualizeArgs da;
    auto* dualize = app.add_subcommand("dualize", "Build the dual graph of an edge list");
    dualize->add_option("edge_list", da.input, "src<TAB>dst file")->required();
    dualize->add_option("--mode", da.mode, "chain | fan | classic")->capture_default_str();
    dualize->add_option("--out", da.out, "Dual edge list output (default stdout)");
    dualize->add_option("--stats", da.stats, "Stats JSON output");
    dualize->add_option("--vertex-table", da.vertex_table, "Dual vertex -> primal arc table");
    dualize->add_flag("--self-loops", da.self_loops, "Add primal self-loops first");
    dualize->add_flag("--bidirect", da.bidirect, "Add the reverse of every arc first");
    dualize->add_option("--sparsify", da.sparsify, "Keep at most k dual neighbors per vertex");
    dualize->add_option("--seed", da.seed, "Sparsification seed");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Run a training sweep from a JSON config");
    train->add_option("config", ta.config, "Experiment config")->required();
    train->add_option("--out", ta.out, "Summary JSON output (default stdout)");
    train->add_option("--seeds", ta.seeds, "Comma-separated seeds overriding the config");
    train->add_option("--data-dir", ta.data_dir, "Dataset root (default $DPGCNN_DATA_DIR)");
    train->add_option("--epochs", ta.epochs, "Override max_epochs");
    train->add_option("--patience", ta.patience, "Override patience");
    train->add_option("--lr", ta.lr, "Override learning rate");
    train->add_option("--keep", ta.keep, "Override dropout keep probability");
    train->add_option("--jobs", ta.jobs, "Parallel runs")->capture_default_str();
    train->add_option("--save-weights", ta.save_weights, "Write the best weights of the lowest seed");
    train->add_flag("--continue-on-failure", ta.continue_on_failure, "Record failed runs and keep going");
    train->add_flag("--no-timestamps", ta.no_timestamps, "Zero wall-clock fields");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Evaluate a vertex model on the test split");
    eval->add_option("config", ea.config, "Experiment config")->required();
    eval->add_option("--weights", ea.weights, "Weights saved by train --save-weights");
    eval->add_option("--seed", ea.seed, "Seed for initialization and sampled splits");
    eval->add_flag("--retrain", ea.retrain, "Train first, then evaluate the best epoch");
    eval->add_option("--out", ea.out, "Output JSON");
    eval->add_option("--data-dir", ea.data_dir, "Dataset root");

    GradcheckArgs ga;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    gradcheck->add_option("--scope", ga.scope, "ops | layers | model | all")
        ->check(CLI::IsMember({"ops", "layers", "model", "all"}))
        ->capture_default_str();
    gradcheck->add_option("--cases", ga.cases, "Random cases per check")->capture_default_str();
    gradcheck->add_option("--seed", ga.seed, "Seed")->capture_default_str();
    gradcheck->add_flag("--inject-fault", ga.inject_fault, "Include an op with a wrong gradient");

    InfoArgs ia;
    auto* info = app.add_subcommand("info", "Dataset or graph statistics");
    info->add_option("--dataset", ia.dataset, "Dataset name under the data root");
    info->add_option("--edge-list", ia.edge_list, "Edge list file");
    info->add_option("--data-dir", ia.data_dir, "Dataset root");

    try {
        std::vector<std::string> rest(args.rbegin(), args.rend());
        if (!rest.empty()) rest.pop_back();
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : parse_error;
    }

    try {
        if (dualize->parsed()) return cmd_dualize(da, out, err);
        if (train->parsed()) return cmd_train(ta, out, err);
        if (eval->parsed()) return cmd_eval(ea, out, err);
        if (gradcheck->parsed()) return cmd_gradcheck(ga, out, err);
        if (info->parsed()) return cmd_info(ia, out, err);
    } catch (const ExitWith& e) {
        err << "error: " << e.message << "\n";
        return e.code;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return parse_error;
    }
    return parse_error;
}

}  // namespace dpgcnn::cli
