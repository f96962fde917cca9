#include "sutrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sutrack {

Box CropTransform::to_crop(const Box& b) const {
    auto [x0, y0] = to_crop(b.x0, b.y0);
    auto [x1, y1] = to_crop(b.x1, b.y1);
    return {x0, y0, x1, y1};
}

Box CropTransform::to_frame(const Box& b) const {
    auto [x0, y0] = to_frame(b.x0, b.y0);
    auto [x1, y1] = to_frame(b.x1, b.y1);
    return {x0, y0, x1, y1};
}

namespace {

// Resamples one H×W×3 image; returns the number of out-of-frame pixels.
std::size_t resample(const Tensor& image, const CropTransform& t, Tensor& out) {
    const std::size_t h = image.dim(0), w = image.dim(1), r = t.resolution;
    const auto src = image.values();
    std::vector<double> dst(r * r * 3, 0.0);
    std::vector<bool> inside(r * r, false);
    double sums[3] = {0, 0, 0};
    std::size_t count = 0;
    const double step = t.side / static_cast<double>(r);
    for (std::size_t v = 0; v < r; ++v) {
        const double sy = std::floor(t.origin_y() + (static_cast<double>(v) + 0.5) * step);
        for (std::size_t u = 0; u < r; ++u) {
            const double sx = std::floor(t.origin_x() + (static_cast<double>(u) + 0.5) * step);
            if (sx < 0 || sy < 0 || sx >= static_cast<double>(w) || sy >= static_cast<double>(h)) continue;
            const std::size_t p = static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx);
            inside[v * r + u] = true;
            ++count;
            for (std::size_t c = 0; c < 3; ++c) {
                dst[(v * r + u) * 3 + c] = src[p * 3 + c];
                sums[c] += src[p * 3 + c];
            }
        }
    }
    const std::size_t padded = r * r - count;
    if (padded > 0) {
        double fill[3] = {0, 0, 0};
        if (count > 0)
            for (std::size_t c = 0; c < 3; ++c) fill[c] = sums[c] / static_cast<double>(count);
        for (std::size_t k = 0; k < r * r; ++k) {
            if (inside[k]) continue;
            for (std::size_t c = 0; c < 3; ++c) dst[k * 3 + c] = fill[c];
        }
    }
    out = Tensor({r, r, 3}, std::move(dst));
    return padded;
}

}  // namespace

Crop crop(const ModalFrame& frame, const Box& box, double factor, std::size_t out_res) {
    if (!(box.width() > 0.0 && box.height() > 0.0)) {
        throw std::invalid_argument("crop: box has zero area");
    }
    if (!(factor > 0.0) || out_res == 0) throw std::invalid_argument("crop: factor and resolution must be positive");
    Crop c;
    c.transform = {box.cx(), box.cy(), factor * std::sqrt(box.width() * box.height()), out_res};
    c.padded_pixels = resample(frame.rgb, c.transform, c.frame.rgb);
    if (frame.aux) {
        Tensor aux;
        resample(*frame.aux, c.transform, aux);
        c.frame.aux = aux;
    }
    c.frame.language = frame.language;
    c.frame.task = frame.task;
    c.box = c.transform.to_crop(box);
    return c;
}

Tensor hanning_window(std::size_t size) {
    if (size < 2) throw std::invalid_argument("hanning_window: size must be at least 2, got " + std::to_string(size));
    std::vector<double> w(size);
    for (std::size_t i = 0; i < size; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(size - 1)));
    }
    Tensor out({size, size});
    auto v = out.mutable_values();
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) v[i * size + j] = w[i] * w[j];
    return out;
}

Detection decode(const HeadOutput& out, const CropTransform& transform, const Tensor& window, std::size_t patch,
                 double window_weight) {
    const std::size_t s = out.grid();
    if (window.shape() != out.score.shape() || out.offset.shape() != Shape{s, s, 2} ||
        out.size.shape() != Shape{s, s, 2}) {
        throw std::invalid_argument("decode: head maps and window disagree in shape");
    }
    const auto score = out.score.values();
    const auto win = window.values();
    std::size_t best = 0;
    double best_value = -1.0;
    for (std::size_t k = 0; k < s * s; ++k) {
        const double penalized = score[k] * ((1.0 - window_weight) + window_weight * win[k]);
        if (penalized > best_value) {
            best_value = penalized;
            best = k;
        }
    }
    const std::size_t row = best / s, col = best % s;
    const auto off = out.offset.values();
    const auto wh = out.size.values();
    const double p = static_cast<double>(patch);
    const double res = static_cast<double>(transform.resolution);
    const double cx = (static_cast<double>(col) + off[best * 2]) * p;
    const double cy = (static_cast<double>(row) + off[best * 2 + 1]) * p;
    const Box in_crop = Box::from_center(cx, cy, wh[best * 2] * res, wh[best * 2 + 1] * res);
    return {transform.to_frame(in_crop), score[best], row, col};
}

Box clamp_box(const Box& b, double width, double height) {
    double x0 = std::clamp(b.x0, 0.0, width - 1.0);
    double y0 = std::clamp(b.y0, 0.0, height - 1.0);
    double x1 = std::clamp(b.x1, x0 + 1.0, width);
    double y1 = std::clamp(b.y1, y0 + 1.0, height);
    return {x0, y0, x1, y1};
}

Tracker::Tracker(const ResponseModel& model, TrackerConfig config)
    : model_(model), config_(config), window_(hanning_window(config.search_res / config.patch)) {}

void Tracker::init(const ModalFrame& first_frame, const Box& box) {
    first_frame.validate();
    Crop t = crop(first_frame, box, config_.template_factor, config_.template_res);
    state_ = {};
    state_.static_template = {t.frame, t.box};
    state_.dynamic_template = {t.frame, t.box};
    state_.last_box = box;
    state_.last_confidence = 1.0;
    initialized_ = true;
}

Detection Tracker::step(const ModalFrame& frame) {
    if (!initialized_) throw std::logic_error("Tracker::step called before init");
    Crop search = crop(frame, state_.last_box, config_.search_factor, config_.search_res);
    const TemplateInput templates[2] = {state_.static_template, state_.dynamic_template};
    HeadOutput out = model_.respond(templates, search.frame);
    if (out.grid() * config_.patch != config_.search_res) {
        throw std::invalid_argument("model score grid " + std::to_string(out.grid()) +
                                    " does not match tracker search resolution " +
                                    std::to_string(config_.search_res));
    }
    Detection det = decode(out, search.transform, window_, config_.patch, config_.window_weight);
    det.box = clamp_box(det.box, static_cast<double>(frame.width()), static_cast<double>(frame.height()));

    ++state_.frame_index;
    state_.last_confidence = det.confidence;
    state_.last_box = det.box;
    if (should_update_template(state_.frame_index, det.confidence, config_)) {
        Crop t = crop(frame, det.box, config_.template_factor, config_.template_res);
        state_.dynamic_template = {t.frame, t.box};
        ++state_.template_updates;
    }
    return det;
}

}  // namespace sutrack
