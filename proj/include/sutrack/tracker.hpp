#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sutrack/embedding.hpp"
#include "sutrack/heads.hpp"
#include "sutrack/types.hpp"

namespace sutrack {

/// Square crop of side `side` centered at (cx, cy), resampled to `resolution`.
struct CropTransform {
    double cx = 0, cy = 0;
    double side = 1;
    std::size_t resolution = 1;

    double scale() const { return static_cast<double>(resolution) / side; }
    double origin_x() const { return cx - 0.5 * side; }
    double origin_y() const { return cy - 0.5 * side; }

    std::pair<double, double> to_crop(double x, double y) const {
        return {(x - origin_x()) * scale(), (y - origin_y()) * scale()};
    }
    std::pair<double, double> to_frame(double u, double v) const {
        return {u / scale() + origin_x(), v / scale() + origin_y()};
    }
    Box to_crop(const Box& b) const;
    Box to_frame(const Box& b) const;
};

struct Crop {
    ModalFrame frame;     // resolution × resolution
    CropTransform transform;
    Box box;              // the input box in crop coordinates
    std::size_t padded_pixels = 0;
};

/// Square crop with side factor·sqrt(w·h) around the box center, nearest-
/// neighbour resampled. Pixels that fall outside the frame take the per-channel
/// mean of the in-frame ones (computed separately for rgb and aux).
Crop crop(const ModalFrame& frame, const Box& box, double factor, std::size_t out_res);

/// Outer product of 1-D Hann windows, w(i) = ½(1 − cos(2πi/(S−1))).
Tensor hanning_window(std::size_t size);

struct Detection {
    Box box;            // frame coordinates
    double confidence;  // unpenalized score at the chosen cell
    std::size_t row = 0, col = 0;
};

/// Picks the cell maximizing score·((1−γ) + γ·window) (first in row-major order
/// on ties) and maps its box back to frame coordinates. γ = window_weight.
Detection decode(const HeadOutput& out, const CropTransform& transform, const Tensor& window, std::size_t patch,
                 double window_weight = 1.0);

struct TrackerConfig {
    std::size_t patch = 16;
    std::size_t template_res = 32;
    std::size_t search_res = 64;
    double template_factor = 2.0;
    double search_factor = 4.0;
    std::uint64_t update_interval = 25;
    double confidence_threshold = 0.7;
    double window_weight = 1.0;
};

/// True when the dynamic template should be refreshed after this frame.
inline bool should_update_template(std::uint64_t frame_index, double confidence, const TrackerConfig& cfg) {
    return cfg.update_interval > 0 && frame_index % cfg.update_interval == 0 && confidence > cfg.confidence_threshold;
}

/// Anything that maps (templates, search crop) to center-head maps.
class ResponseModel {
public:
    virtual ~ResponseModel() = default;
    virtual HeadOutput respond(std::span<const TemplateInput> templates, const ModalFrame& search) const = 0;
};

struct TrackerState {
    TemplateInput static_template;
    TemplateInput dynamic_template;
    std::uint64_t frame_index = 0;
    double last_confidence = 1.0;
    Box last_box;
    std::uint64_t template_updates = 0;
};

/// Keeps one static template (first frame) and one dynamic template that is
/// replaced every `update_interval` frames when confidence exceeds the threshold.
class Tracker {
public:
    Tracker(const ResponseModel& model, TrackerConfig config);

    void init(const ModalFrame& first_frame, const Box& box);
    Detection step(const ModalFrame& frame);

    const TrackerState& state() const { return state_; }
    const TrackerConfig& config() const { return config_; }

private:
    const ResponseModel& model_;
    TrackerConfig config_;
    TrackerState state_;
    Tensor window_;
    bool initialized_ = false;
};

/// Clamps a box into a width×height frame, keeping at least one pixel of extent.
Box clamp_box(const Box& b, double width, double height);

}  // namespace sutrack
