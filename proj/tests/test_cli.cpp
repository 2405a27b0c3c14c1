#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "dpgcnn");
    std::ostringstream out;
    std::ostringstream err;
    const int code = dpgcnn::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("dpgcnn_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p.string();
    }

    std::string two_cluster_config() {
        const json cfg = {{"name", "toy"},
                          {"task", "vertex_classification"},
                          {"dataset", {{"generator", {{"kind", "two_cluster"}, {"per_class", 8}, {"seed", 1}}},
                                       {"normalize", false}}},
                          {"model", {{"layers", {{{"kind", "gat"}, {"out", 4}, {"heads", 2}},
                                                 {{"kind", "dpgcnn"}, {"out", 2}, {"merge", "average"},
                                                  {"activation", "softmax"}, {"dual_width", 4}}}}}},
                          {"train", {{"max_epochs", 10}, {"patience", 10}, {"seeds", {1, 2}}}}};
        return write("toy.json", cfg.dump());
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, DualizeTriangleClassic) {
    const auto in = write("tri.tsv", "0\t1\n1\t2\n0\t2\n");
    const auto stats = (dir_ / "stats.json").string();
    const Result r = run({"dualize", in, "--mode", "classic", "--out", (dir_ / "dual.tsv").string(), "--stats", stats});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream f(stats);
    const json j = json::parse(f);
    EXPECT_EQ(j["dual_edge_count_actual"], 3);
    EXPECT_EQ(j["formulas_agree"], true);
}

TEST_F(CliTest, DualizeDirectedCycleChain) {
    const Result r = run({"dualize", write("c.tsv", "0\t1\n1\t2\n2\t0\n"), "--stats", (dir_ / "s.json").string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "0\t1\n0\t2\n1\t2\n");
    std::ifstream f(dir_ / "s.json");
    EXPECT_EQ(json::parse(f)["formulas_agree"], false);
}

TEST_F(CliTest, DualizeErrors) {
    EXPECT_EQ(run({"dualize", (dir_ / "missing.tsv").string()}).code, 2);
    const Result bad = run({"dualize", write("bad.tsv", "0\t1\nxx\n")});
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("line 2"), std::string::npos);
    EXPECT_EQ(run({"dualize", write("l.tsv", "0\t0\n0\t1\n"), "--mode", "classic"}).code, 3);
    EXPECT_EQ(run({"dualize", write("ok.tsv", "0\t1\n"), "--mode", "zigzag"}).code, 3);
}

TEST_F(CliTest, StringIdsWriteSidecar) {
    const auto out = (dir_ / "d.tsv").string();
    ASSERT_EQ(run({"dualize", write("s.tsv", "a\tb\nb\tc\n"), "--out", out}).code, 0);
    std::ifstream f(out + ".ids.json");
    EXPECT_EQ(json::parse(f)["c"], 2);
}

TEST_F(CliTest, TrainIsReproducibleAndOverridesSeeds) {
    const auto cfg = two_cluster_config();
    const Result a = run({"train", cfg, "--no-timestamps", "--seeds", "3,1"});
    ASSERT_EQ(a.code, 0) << a.err;
    const json j = json::parse(a.out);
    EXPECT_TRUE(j.contains("mean_test_acc"));
    ASSERT_EQ(j["runs"].size(), 2u);
    EXPECT_EQ(j["runs"][0]["seed"], 1);
    const Result b = run({"train", cfg, "--no-timestamps", "--seeds", "1,3", "--jobs", "2"});
    EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, TrainSaveWeightsThenEval) {
    const auto cfg = two_cluster_config();
    const auto weights = (dir_ / "w.json").string();
    const Result t = run({"train", cfg, "--no-timestamps", "--seeds", "4", "--save-weights", weights});
    ASSERT_EQ(t.code, 0) << t.err;
    const double trained = json::parse(t.out)["runs"][0]["test_acc"];
    const Result e = run({"eval", cfg, "--weights", weights});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(json::parse(e.out)["test_acc"].get<double>(), trained);
}

TEST_F(CliTest, TrainErrors) {
    EXPECT_EQ(run({"train", write("bad.json", "{not json")}).code, 2);
    EXPECT_EQ(run({"train", write("m.json", R"({"dataset":{"name":"nowhere"}})"), "--data-dir", dir_.string()}).code,
              2);
    EXPECT_EQ(run({"train", write("k.json", R"({"model":{"layers":[{"kind":"nope"}]}})")}).code, 3);
    const auto cfg = two_cluster_config();
    EXPECT_EQ(run({"train", cfg, "--lr", "1e300", "--seeds", "1"}).code, 4);
    const Result cont = run({"train", cfg, "--lr", "1e300", "--seeds", "1", "--continue-on-failure"});
    EXPECT_EQ(cont.code, 0);
    EXPECT_EQ(json::parse(cont.out)["failures"], 1);
}

TEST_F(CliTest, GradcheckExitCodes) {
    EXPECT_EQ(run({"gradcheck", "--scope", "ops", "--cases", "2"}).code, 0);
    const Result bad = run({"gradcheck", "--scope", "ops", "--cases", "2", "--inject-fault"});
    EXPECT_EQ(bad.code, 5);
    EXPECT_NE(bad.err.find("faulty_square"), std::string::npos);
    EXPECT_EQ(run({"gradcheck", "--scope", "everything"}).code, 2);
}

TEST_F(CliTest, InfoAndUsage) {
    const Result r = run({"info", "--edge-list", write("g.tsv", "0\t1\n1\t0\n")});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["bidirected"], true);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
}
