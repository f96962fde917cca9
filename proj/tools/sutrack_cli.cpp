#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sutrack/commands.hpp"
#include "sutrack/results.hpp"

namespace fs = std::filesystem;
using namespace sutrack;

namespace {

RunConfig load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig c = path.empty() ? RunConfig{} : load_config(path);
    for (const auto& o : overrides) apply_override(c, o);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sutrack: synthetic multi-modal single-object tracker"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out, ckpt, pred_dir, axis, loss_csv;
    std::vector<std::string> overrides;

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat JSON config")->required()->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides, "key=value override, applied after the file (last wins)");
    };

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_config(gen);
    gen->add_option("--out", out, "output dataset directory")->required();

    auto* train = app.add_subcommand("train", "train a model on a dataset");
    add_config(train);
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", out, "checkpoint path")->required();
    train->add_option("--loss-csv", loss_csv, "loss curve path (default <ckpt>.loss.csv)");

    auto* track = app.add_subcommand("track", "track every sequence of a dataset");
    track->add_option("--ckpt", ckpt, "checkpoint path")->required();
    track->add_option("--data", data_dir, "dataset directory")->required();
    track->add_option("--out", out, "result directory")->required();
    track->add_option("--set", overrides, "key=value override of the checkpoint config");

    auto* eval = app.add_subcommand("eval", "score tracker results against ground truth");
    eval->add_option("--pred", pred_dir, "result directory")->required();
    eval->add_option("--data", data_dir, "dataset directory")->required();
    eval->add_option("--out", out, "metrics JSON path (default <pred>/metrics.json)");

    auto* ablate = app.add_subcommand("ablate", "train and evaluate one variant per axis value");
    add_config(ablate);
    ablate->add_option("--axis", axis, "NAME=V1,V2,...")->required();
    ablate->add_option("--out", out, "comparison CSV (default ablation.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            cmd_gen(load_with_overrides(config_path, overrides), out);
        } else if (train->parsed()) {
            cmd_train(load_with_overrides(config_path, overrides), data_dir, out,
                      loss_csv.empty() ? loss_csv_path(out) : fs::path(loss_csv));
        } else if (track->parsed()) {
            cmd_track(ckpt, data_dir, out, overrides, thread_count());
        } else if (eval->parsed()) {
            const EvalReport report = evaluate_predictions(pred_dir, data_dir);
            const std::string json = report.to_json();
            std::cout << json << "\n";
            const fs::path dest = out.empty() ? fs::path(pred_dir) / "metrics.json" : fs::path(out);
            std::ofstream f(dest);
            if (!(f << json << "\n")) throw std::runtime_error("cannot write " + dest.string());
        } else if (ablate->parsed()) {
            const auto [name, values] = parse_axis(axis);
            cmd_ablate(load_with_overrides(config_path, overrides), name, values,
                       out.empty() ? fs::path("ablation.csv") : fs::path(out), thread_count(), &std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
