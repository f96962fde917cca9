#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sutrack/data.hpp"
#include "sutrack/model.hpp"
#include "sutrack/train.hpp"

namespace sutrack {

/// Everything a CLI run needs. Loaded from flat JSON; every key optional.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    GeneratorOptions generator;
    std::vector<Task> gen_tasks{kAllTasks.begin(), kAllTasks.end()};
    std::size_t num_sequences = 200;
    std::size_t seq_length = 20;
    /// Held-out sequences used by `ablate`.
    std::size_t eval_sequences = 20;
    double window_weight = 1.0;
    std::uint64_t seed = 0;

    RunConfig();

    /// Applies one key. `value` is JSON text; a bare word is taken as a string.
    void set(std::string_view key, std::string_view value);
    /// Flat JSON object with every key.
    std::string to_json() const;

    /// Seeds for the independent random streams, all derived from `seed`.
    std::uint64_t data_seed() const;
    std::uint64_t init_seed() const;
    std::uint64_t train_seed() const;
    std::uint64_t eval_seed() const;

    /// Model/train configs with the derived seeds filled in.
    ModelConfig model_config() const;
    TrainConfig train_config() const;
    TrackerConfig tracker_config() const;

    static const std::vector<std::string>& keys();
};

/// Parses a JSON object. Errors name the line/column or the offending key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// "key=value" override, last one wins.
void apply_override(RunConfig& config, std::string_view assignment);

/// Generates `count` sequences from `seed`, tasks assigned round-robin over gen_tasks.
std::vector<SyntheticSequence> generate_dataset(const RunConfig& config, std::size_t count, std::uint64_t seed);
/// The training split: num_sequences sequences from data_seed().
std::vector<SyntheticSequence> generate_dataset(const RunConfig& config);

}  // namespace sutrack
