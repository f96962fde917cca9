#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "support/temp_dir.hpp"
#include "sutrack/commands.hpp"
#include "sutrack/results.hpp"

using namespace sutrack;
using namespace sutrack::testing;

namespace {

const char* kTinyConfig = R"({
  "dim": 16, "depth": 1, "heads": 2, "head_hidden": 8, "task_hidden": 8,
  "steps": 3, "batch": 2, "num_sequences": 5, "seq_length": 6, "eval_sequences": 2,
  "frame_size": 64, "min_target": 10, "max_target": 16, "seed": 1
})";

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + SUTRACK_CLI + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

class Cli : public ::testing::Test {
protected:
    TempDir tmp{"cli"};
    fs::path config = tmp / "config.json";
    void SetUp() override { std::ofstream(config) << kTinyConfig; }
    std::string q(const fs::path& p) const { return "'" + p.string() + "'"; }
};

}  // namespace

TEST_F(Cli, GenTrainTrackEvalPipeline) {
    const fs::path data = tmp / "data", ckpt = tmp / "model.sutk", pred = tmp / "pred";
    ASSERT_EQ(run("gen --config " + q(config) + " --out " + q(data)), 0);
    EXPECT_EQ(list_dataset(data).size(), 5u);
    EXPECT_TRUE(fs::exists(data / "config.json"));

    ASSERT_EQ(run("train --config " + q(config) + " --data " + q(data) + " --out " + q(ckpt)), 0);
    EXPECT_TRUE(fs::exists(ckpt));
    EXPECT_TRUE(fs::exists(config_sidecar(ckpt)));
    const std::string csv = slurp(loss_csv_path(ckpt));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,class,iou,l1,task,total");
    EXPECT_EQ(count_lines(csv), 4u);
    EXPECT_EQ(slurp(ckpt).substr(0, 4), "SUTK");

    ASSERT_EQ(run("track --ckpt " + q(ckpt) + " --data " + q(data) + " --out " + q(pred), "SUTRACK_THREADS=2"), 0);
    const auto lines = read_results(pred / "seq_00000.txt");
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines[0].confidence, 1.0);

    ASSERT_EQ(run("eval --pred " + q(pred) + " --data " + q(data)), 0);
    const auto metrics = nlohmann::json::parse(slurp(pred / "metrics.json"));
    EXPECT_EQ(metrics.at("sequences").size(), 5u);
    EXPECT_GE(metrics.at("mean").at("success_auc").get<double>(), 0.0);
}

TEST_F(Cli, TrainingIsBitwiseRepeatable) {
    const fs::path data = tmp / "data";
    ASSERT_EQ(run("gen --config " + q(config) + " --out " + q(data)), 0);
    ASSERT_EQ(run("train --config " + q(config) + " --data " + q(data) + " --out " + q(tmp / "a.sutk")), 0);
    ASSERT_EQ(run("train --config " + q(config) + " --data " + q(data) + " --out " + q(tmp / "b.sutk")), 0);
    EXPECT_EQ(slurp(tmp / "a.sutk.loss.csv"), slurp(tmp / "b.sutk.loss.csv"));
    EXPECT_EQ(slurp(tmp / "a.sutk"), slurp(tmp / "b.sutk"));
    ASSERT_EQ(run("train --config " + q(config) + " --set seed=2 --data " + q(data) + " --out " + q(tmp / "c.sutk")), 0);
    EXPECT_NE(slurp(tmp / "a.sutk.loss.csv"), slurp(tmp / "c.sutk.loss.csv"));
}

TEST_F(Cli, EvalOfGroundTruthIsPerfect) {
    const fs::path data = tmp / "data", pred = tmp / "gt";
    ASSERT_EQ(run("gen --config " + q(config) + " --out " + q(data)), 0);
    fs::create_directories(pred);
    for (const auto& dir : list_dataset(data)) {
        const auto seq = read_sequence(dir);
        std::vector<ResultLine> lines;
        for (std::size_t i = 0; i < seq.boxes.size(); ++i) lines.push_back({i, seq.boxes[i], 1.0});
        write_results(pred / (dir.filename().string() + ".txt"), lines);
    }
    ASSERT_EQ(run("eval --pred " + q(pred) + " --data " + q(data) + " --out " + q(tmp / "m.json")), 0);
    const auto metrics = nlohmann::json::parse(slurp(tmp / "m.json"));
    EXPECT_EQ(metrics.at("mean").at("precision").get<double>(), 1.0);
    EXPECT_EQ(metrics.at("mean").at("mean_iou").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(metrics.at("mean").at("success_auc").get<double>(), 20.0 / 21.0);
}

TEST_F(Cli, AblateWritesOneRowPerValue) {
    const fs::path csv = tmp / "ablation.csv";
    ASSERT_EQ(run("ablate --config " + q(config) + " --axis token_type=none,hard,soft --out " + q(csv)), 0);
    const std::string text = slurp(csv);
    ASSERT_EQ(count_lines(text), 4u);
    EXPECT_EQ(text.substr(0, text.find('\n')), "token_type_mode,success_auc,precision,mean_iou,task_accuracy,final_loss");
    EXPECT_NE(text.find("\nnone,"), std::string::npos);
    EXPECT_NE(text.find("\nhard,"), std::string::npos);
    EXPECT_NE(text.find("\nsoft,"), std::string::npos);
}

TEST_F(Cli, ErrorsExitNonzero) {
    const fs::path data = tmp / "data";
    EXPECT_NE(run(""), 0);
    EXPECT_NE(run("frobnicate"), 0);
    EXPECT_NE(run("gen --out " + q(data)), 0);
    EXPECT_NE(run("gen --config " + q(tmp / "missing.json") + " --out " + q(data)), 0);
    std::ofstream(tmp / "bad.json") << R"({"stepz": 1})";
    EXPECT_NE(run("gen --config " + q(tmp / "bad.json") + " --out " + q(data)), 0);
    std::ofstream(tmp / "broken.json") << "{ \"steps\": ";
    EXPECT_NE(run("gen --config " + q(tmp / "broken.json") + " --out " + q(data)), 0);
    EXPECT_NE(run("gen --config " + q(config) + " --set steps --out " + q(data)), 0);
    ASSERT_EQ(run("gen --config " + q(config) + " --out " + q(data)), 0);
    EXPECT_NE(run("track --ckpt " + q(tmp / "none.sutk") + " --data " + q(data) + " --out " + q(tmp / "p")), 0);
    EXPECT_NE(run("eval --pred " + q(tmp / "nothing") + " --data " + q(data)), 0);
    EXPECT_NE(run("ablate --config " + q(config) + " --axis bogus=1,2"), 0);
    EXPECT_NE(run("ablate --config " + q(config) + " --axis token_type=none,sideways"), 0);
    EXPECT_NE(run("train --config " + q(config) + " --data " + q(tmp / "empty") + " --out " + q(tmp / "x.sutk")), 0);
}

TEST(Results, RoundTripAndDiagnostics) {
    TempDir tmp("results");
    const std::vector<ResultLine> lines{{0, {1, 2, 3, 4}, 1.0}, {1, {1.5, 2.25, 3.125, 4.0625}, 0.123456789012345}};
    write_results(tmp / "r.txt", lines);
    const auto back = read_results(tmp / "r.txt");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].box, lines[1].box);
    EXPECT_EQ(back[1].confidence, lines[1].confidence);
    EXPECT_EQ(slurp(tmp / "r.txt").substr(0, 10), "0 1 2 3 4 ");

    std::ofstream(tmp / "gap.txt") << "0 1 2 3 4 1\n2 1 2 3 4 1\n";
    try {
        read_results(tmp / "gap.txt");
        FAIL() << "frame gap accepted";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("gap.txt:2:"), std::string::npos) << e.what();
    }
    std::ofstream(tmp / "short.txt") << "0 1 2 3\n";
    EXPECT_THROW(read_results(tmp / "short.txt"), std::runtime_error);
}

TEST(Results, ThreadCountFromEnvironment) {
    ::setenv("SUTRACK_THREADS", "3", 1);
    EXPECT_EQ(thread_count(), 3u);
    ::setenv("SUTRACK_THREADS", "0", 1);
    EXPECT_GE(thread_count(), 1u);
    ::unsetenv("SUTRACK_THREADS");
    EXPECT_GE(thread_count(), 1u);
}

TEST(Results, ParallelForCoversEveryIndexAndRethrows) {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("boom"); }),
                 std::runtime_error);
}

TEST(Axis, ParsesNameAndValues) {
    const auto [name, values] = parse_axis("token_type=none,hard,soft");
    EXPECT_EQ(name, "token_type_mode");
    EXPECT_EQ(values, (std::vector<std::string>{"none", "hard", "soft"}));
    EXPECT_EQ(parse_axis("window_weight=0,0.5").first, "window_weight");
    EXPECT_THROW(parse_axis("token_type"), std::invalid_argument);
    EXPECT_THROW(parse_axis("token_type=a,,b"), std::invalid_argument);
    EXPECT_THROW(parse_axis("colour=red"), std::invalid_argument);
}
