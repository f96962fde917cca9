#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sutrack/random.hpp"
#include "sutrack/types.hpp"

namespace sutrack {

/// Generator parameters for one synthetic sequence.
struct SequenceDescriptor {
    Task task = Task::RGB;
    std::size_t height = 128, width = 128;
    std::string shape = "square";  // square | circle | diamond
    std::string color = "red";     // see palette_colors()
    std::size_t target_w = 16, target_h = 16;
    double start_x = 56, start_y = 56;  // top-left corner of the target at frame 0
    double vx = 1.0, vy = 0.5;          // pixels per frame, reflected at the borders
    std::size_t distractors = 2;
    /// Target drawn in the background colour: invisible in RGB, visible in aux.
    bool camouflage = false;

    /// "<color> <shape>", e.g. "red square".
    std::string language() const { return color + " " + shape; }
};

const std::vector<std::string>& palette_colors();
const std::vector<std::string>& palette_shapes();

struct SyntheticSequence {
    Task task = Task::RGB;
    std::vector<ModalFrame> frames;
    std::vector<Box> boxes;  // integer pixel coordinates, inside the frame
    SequenceDescriptor descriptor;
    std::uint64_t seed = 0;

    std::size_t length() const { return frames.size(); }
};

/// Renders a moving coloured target over a static textured background with
/// moving distractors. Aux images per task: RGBD inverse depth (target
/// nearest and brightest), RGBT heat (hot target on a cool background), RGBE
/// per-pixel temporal-difference magnitude of the RGB stream. RGBL frames carry
/// the descriptor's language string. Values are rounded to float precision.
SyntheticSequence generate(const SequenceDescriptor& descriptor, std::uint64_t seed, std::size_t length);

struct GeneratorOptions {
    std::size_t frame_size = 128;
    std::size_t min_target = 14, max_target = 22;
    double max_speed = 1.5;
    std::size_t max_distractors = 2;
    bool camouflage = false;
};

/// Draws a random descriptor for `task`.
SequenceDescriptor random_descriptor(Task task, const GeneratorOptions& options, Rng& rng);

/// Relative task sampling weights, normalized at draw time.
struct SampleMix {
    std::array<double, kNumTasks> weights{2.0, 1.0, 1.0, 1.0, 1.0};

    static SampleMix uniform() { return {{1.0, 1.0, 1.0, 1.0, 1.0}}; }
    double weight(Task t) const { return weights[task_index(t)]; }
};

/// One training draw: indices into a sequence pool.
struct SamplePick {
    std::size_t sequence = 0;
    std::size_t template_frame = 0;
    std::size_t dynamic_frame = 0;  // second template, between template and search
    std::size_t search_frame = 0;
    Task task = Task::RGB;
};

class SamplePool {
public:
    explicit SamplePool(const std::vector<SyntheticSequence>& sequences);

    /// Task ∝ weight, then a uniform sequence of that task, then frames with
    /// |search − template| ≤ max_gap. Throws if a weighted task has no sequence.
    std::vector<SamplePick> sample_batch(const SampleMix& mix, std::size_t batch, std::size_t max_gap,
                                         Rng& rng) const;
    Task draw_task(const SampleMix& mix, Rng& rng) const;

    const std::vector<SyntheticSequence>& sequences() const { return sequences_; }

private:
    const std::vector<SyntheticSequence>& sequences_;
    std::array<std::vector<std::size_t>, kNumTasks> by_task_;
};

struct TrackingMetrics {
    double success_auc = 0;
    double precision = 0;  // center error ≤ 20 px
    double mean_iou = 0;
};

/// Success AUC averages, over thresholds 0, 0.05, …, 1.0, the fraction of
/// frames with IoU strictly above the threshold.
TrackingMetrics compute_metrics(std::span<const Box> predicted, std::span<const Box> ground_truth);

// On-disk container: one directory per sequence holding meta.json and
// fNNNNN.rgb / fNNNNN.aux frame files.
void write_sequence(const std::filesystem::path& dir, const SyntheticSequence& sequence);
SyntheticSequence read_sequence(const std::filesystem::path& dir);

/// Frame file: "SUTF", u32 H, u32 W, u32 C, then H·W·C little-endian f32.
void write_frame_file(const std::filesystem::path& path, const Tensor& image);
Tensor read_frame_file(const std::filesystem::path& path);

/// Writes sequences as DIR/seq_00000, DIR/seq_00001, ...
void write_dataset(const std::filesystem::path& dir, const std::vector<SyntheticSequence>& sequences);
/// Sorted sequence directories under `dir` (those containing meta.json).
std::vector<std::filesystem::path> list_dataset(const std::filesystem::path& dir);
std::vector<SyntheticSequence> read_dataset(const std::filesystem::path& dir);

}  // namespace sutrack
