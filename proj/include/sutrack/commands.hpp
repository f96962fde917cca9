#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sutrack/config.hpp"
#include "sutrack/data.hpp"

namespace sutrack {

namespace fs = std::filesystem;

/// Sidecar written next to a checkpoint so `track` can rebuild the model.
fs::path config_sidecar(const fs::path& checkpoint);
/// Default loss-curve path for a checkpoint.
fs::path loss_csv_path(const fs::path& checkpoint);

void cmd_gen(const RunConfig& config, const fs::path& out_dir);

/// Trains on the dataset in `data_dir`; writes the checkpoint, its config sidecar
/// and the loss curve (columns step,class,iou,l1,task,total).
void cmd_train(const RunConfig& config, const fs::path& data_dir, const fs::path& checkpoint,
               const fs::path& loss_csv);

/// Writes OUT/<sequence dir name>.txt for every sequence under `data_dir`.
void cmd_track(const fs::path& checkpoint, const fs::path& data_dir, const fs::path& out_dir,
               const std::vector<std::string>& overrides, std::size_t threads);

struct EvalReport {
    std::vector<std::string> names;
    std::vector<TrackingMetrics> per_sequence;
    TrackingMetrics mean;  // averaged over sequences
    std::string to_json() const;
};

EvalReport evaluate_predictions(const fs::path& pred_dir, const fs::path& data_dir);

struct AblationRow {
    std::string value;
    TrackingMetrics metrics;
    double task_accuracy = 0;
    double final_loss = 0;
};

/// For each value of `axis`: train on a fresh training split, track the held-out
/// split and evaluate. Writes one CSV row per value.
std::vector<AblationRow> cmd_ablate(const RunConfig& config, const std::string& axis,
                                    const std::vector<std::string>& values, const fs::path& csv_path,
                                    std::size_t threads, std::ostream* log = nullptr);

/// "NAME=V1,V2,..." → (NAME, values). NAME may drop a trailing "_mode".
std::pair<std::string, std::vector<std::string>> parse_axis(const std::string& axis);

}  // namespace sutrack
