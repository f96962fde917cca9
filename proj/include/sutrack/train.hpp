#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sutrack/data.hpp"
#include "sutrack/losses.hpp"
#include "sutrack/model.hpp"
#include "sutrack/parameters.hpp"

namespace sutrack {

struct TrainConfig {
    AdamWConfig optim;
    std::size_t steps = 2000;
    std::size_t batch = 8;
    std::uint64_t seed = 0;
    SampleMix mix;
    LossWeights weights;
    FocalParams focal;
    std::size_t max_frame_gap = 8;
    double template_factor = 2.0;
    double search_factor = 4.0;
    /// Search-crop center shift, uniform in ±search_jitter·sqrt(w·h) per axis.
    double search_jitter = 0.6;
    /// Search-crop side scaled by exp(U(−scale_jitter, scale_jitter)).
    double scale_jitter = 0.15;
};

/// Cropped inputs for one training draw.
struct TrainingExample {
    std::vector<TemplateInput> templates;  // static, dynamic
    ModalFrame search;
    Box search_box;  // in search-crop pixels
    Task task = Task::RGB;
};

TrainingExample make_example(const SamplePool& pool, const SamplePick& pick, const ModelConfig& model,
                             const TrainConfig& train, Rng& rng);

/// Per-sample loss terms averaged over the examples (graph attached).
LossTerms batch_loss(const SUTrackModel& model, std::span<const TrainingExample> batch, const TrainConfig& train);

class Trainer {
public:
    Trainer(SUTrackModel& model, TrainConfig config);

    /// One optimizer step on a freshly sampled batch.
    LossReport step(const SamplePool& pool);
    /// Runs config.steps steps; `on_step(step_index, report)` is called after each.
    void run(const SamplePool& pool, const std::function<void(std::size_t, const LossReport&)>& on_step = {});

    const TrainConfig& config() const { return config_; }
    std::uint64_t steps_done() const { return optimizer_.steps(); }

private:
    SUTrackModel& model_;
    TrainConfig config_;
    AdamW optimizer_;
    Rng rng_;
};

/// Fraction of examples whose task argmax matches the true task.
double task_accuracy(const SUTrackModel& model, std::span<const TrainingExample> examples);

struct SequenceResult {
    std::vector<Box> boxes;           // frame 0 is the initialization box
    std::vector<double> confidences;  // frame 0 reports 1
    std::uint64_t template_updates = 0;
};

/// Runs the full inference state machine over a sequence from its first gt box.
SequenceResult track_sequence(const ResponseModel& model, const SyntheticSequence& sequence,
                              const TrackerConfig& config);

TrackerConfig tracker_config_for(const ModelConfig& model, double window_weight = 1.0);

}  // namespace sutrack
