#include "sutrack/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sutrack/losses.hpp"

namespace sutrack {

namespace {

struct Rgb {
    double r, g, b;
};

const std::vector<std::pair<std::string, Rgb>>& palette() {
    static const std::vector<std::pair<std::string, Rgb>> colors = {
        {"red", {0.90, 0.15, 0.15}},   {"green", {0.15, 0.80, 0.20}}, {"blue", {0.15, 0.25, 0.90}},
        {"yellow", {0.95, 0.85, 0.15}}, {"purple", {0.60, 0.20, 0.75}}, {"cyan", {0.15, 0.80, 0.85}},
    };
    return colors;
}

Rgb color_of(const std::string& name) {
    for (const auto& [n, c] : palette()) {
        if (n == name) return c;
    }
    throw std::invalid_argument("unknown target colour '" + name + "'");
}

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

// Whether pixel (row, col) belongs to a shape occupying the integer box.
bool shape_covers(const std::string& shape, const Box& b, std::size_t row, std::size_t col) {
    const double x = static_cast<double>(col) + 0.5, y = static_cast<double>(row) + 0.5;
    if (x < b.x0 || x >= b.x1 || y < b.y0 || y >= b.y1) return false;
    const double hx = 0.5 * b.width(), hy = 0.5 * b.height();
    const double dx = (x - b.cx()) / hx, dy = (y - b.cy()) / hy;
    if (shape == "square") return true;
    if (shape == "circle") return dx * dx + dy * dy <= 1.0;
    if (shape == "diamond") return std::fabs(dx) + std::fabs(dy) <= 1.0;
    throw std::invalid_argument("unknown target shape '" + shape + "'");
}

struct Mover {
    double x, y, vx, vy;
    std::size_t w, h;
    std::string shape;
    Rgb color;

    Box box() const {
        const double bx = std::round(x), by = std::round(y);
        return {bx, by, bx + static_cast<double>(w), by + static_cast<double>(h)};
    }
    void advance(double width, double height) {
        const double max_x = width - static_cast<double>(w);
        const double max_y = height - static_cast<double>(h);
        x += vx;
        y += vy;
        if (x < 0) { x = -x; vx = -vx; }
        if (x > max_x) { x = 2 * max_x - x; vx = -vx; }
        if (y < 0) { y = -y; vy = -vy; }
        if (y > max_y) { y = 2 * max_y - y; vy = -vy; }
        x = std::clamp(x, 0.0, max_x);
        y = std::clamp(y, 0.0, max_y);
    }
};

}  // namespace

const std::vector<std::string>& palette_colors() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, c] : palette()) n.push_back(name);
        return n;
    }();
    return names;
}

const std::vector<std::string>& palette_shapes() {
    static const std::vector<std::string> shapes = {"square", "circle", "diamond"};
    return shapes;
}

SyntheticSequence generate(const SequenceDescriptor& d, std::uint64_t seed, std::size_t length) {
    if (length < 2) throw std::invalid_argument("generate: sequence length must be at least 2");
    if (d.target_w == 0 || d.target_h == 0 || d.target_w > d.width || d.target_h > d.height) {
        throw std::invalid_argument("generate: target size does not fit the frame");
    }
    const std::size_t h = d.height, w = d.width;
    const double fw = static_cast<double>(w), fh = static_cast<double>(h);
    Rng rng(seed);

    // Static background: base colour plus low-frequency texture and fixed noise.
    const Rgb target_color = color_of(d.color);
    Rgb base{rng.uniform(0.25, 0.55), rng.uniform(0.25, 0.55), rng.uniform(0.25, 0.55)};
    if (d.camouflage) base = target_color;
    const double fx = rng.uniform(0.05, 0.25), fy = rng.uniform(0.05, 0.25);
    const double px = rng.uniform(0, 6.283), py = rng.uniform(0, 6.283);
    std::vector<double> background(h * w * 3), heat_noise(h * w);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const double tex = 0.08 * std::sin(fx * static_cast<double>(j) + px) * std::cos(fy * static_cast<double>(i) + py);
            const double c[3] = {base.r, base.g, base.b};
            for (std::size_t k = 0; k < 3; ++k)
                background[(i * w + j) * 3 + k] = std::clamp(c[k] + tex + rng.uniform(-0.03, 0.03), 0.0, 1.0);
            heat_noise[i * w + j] = rng.uniform(-0.04, 0.04);
        }
    }

    Mover target{d.start_x, d.start_y, d.vx, d.vy, d.target_w, d.target_h, d.shape, target_color};
    target.x = std::clamp(target.x, 0.0, fw - static_cast<double>(d.target_w));
    target.y = std::clamp(target.y, 0.0, fh - static_cast<double>(d.target_h));
    std::vector<Mover> distractors;
    const auto& colors = palette();
    for (std::size_t k = 0; k < d.distractors; ++k) {
        std::size_t ci;
        do {
            ci = rng.below(colors.size());
        } while (colors[ci].first == d.color);
        const auto& shapes = palette_shapes();
        Mover m;
        m.w = std::max<std::size_t>(4, d.target_w + rng.below(5) - 2);
        m.h = std::max<std::size_t>(4, d.target_h + rng.below(5) - 2);
        m.w = std::min(m.w, w);
        m.h = std::min(m.h, h);
        m.x = rng.uniform(0, fw - static_cast<double>(m.w));
        m.y = rng.uniform(0, fh - static_cast<double>(m.h));
        m.vx = rng.uniform(-1.0, 1.0);
        m.vy = rng.uniform(-1.0, 1.0);
        m.shape = shapes[rng.below(shapes.size())];
        m.color = colors[ci].second;
        distractors.push_back(m);
    }

    SyntheticSequence seq;
    seq.task = d.task;
    seq.descriptor = d;
    seq.seed = seed;
    std::vector<double> previous;
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) {
            target.advance(fw, fh);
            for (auto& m : distractors) m.advance(fw, fh);
        }
        std::vector<double> rgb = background;
        std::vector<double> depth(h * w), heat(h * w);
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                depth[i * w + j] = 0.15 + 0.3 * static_cast<double>(i) / fh;
                heat[i * w + j] = 0.12 + heat_noise[i * w + j];
            }
        }
        auto paint = [&](const Mover& m, bool visible_rgb, double depth_value, double heat_value) {
            const Box b = m.box();
            const auto i0 = static_cast<std::size_t>(b.y0), i1 = static_cast<std::size_t>(b.y1);
            const auto j0 = static_cast<std::size_t>(b.x0), j1 = static_cast<std::size_t>(b.x1);
            for (std::size_t i = i0; i < i1; ++i) {
                for (std::size_t j = j0; j < j1; ++j) {
                    if (!shape_covers(m.shape, b, i, j)) continue;
                    if (visible_rgb) {
                        rgb[(i * w + j) * 3 + 0] = m.color.r;
                        rgb[(i * w + j) * 3 + 1] = m.color.g;
                        rgb[(i * w + j) * 3 + 2] = m.color.b;
                    }
                    depth[i * w + j] = depth_value;
                    heat[i * w + j] = heat_value;
                }
            }
        };
        for (const auto& m : distractors) paint(m, true, 0.55, 0.3);
        paint(target, !d.camouflage, 0.9, 0.92);
        for (auto& v : rgb) v = quantize(v);

        ModalFrame frame;
        frame.task = d.task;
        frame.rgb = Tensor({h, w, 3}, rgb);
        if (task_has_aux(d.task)) {
            std::vector<double> aux(h * w * 3);
            for (std::size_t p = 0; p < h * w; ++p) {
                double v = 0.0;
                if (d.task == Task::RGBD) {
                    v = depth[p];
                } else if (d.task == Task::RGBT) {
                    v = heat[p];
                } else if (!previous.empty()) {
                    for (std::size_t k = 0; k < 3; ++k) v += std::fabs(rgb[p * 3 + k] - previous[p * 3 + k]);
                    v /= 3.0;
                }
                const double q = quantize(std::clamp(v, 0.0, 1.0));
                aux[p * 3] = aux[p * 3 + 1] = aux[p * 3 + 2] = q;
            }
            frame.aux = Tensor({h, w, 3}, std::move(aux));
        }
        if (d.task == Task::RGBL) frame.language = d.language();
        previous = std::move(rgb);
        seq.frames.push_back(std::move(frame));
        seq.boxes.push_back(target.box());
    }
    return seq;
}

SequenceDescriptor random_descriptor(Task task, const GeneratorOptions& o, Rng& rng) {
    if (o.min_target == 0 || o.min_target > o.max_target || o.max_target >= o.frame_size) {
        throw std::invalid_argument("random_descriptor: invalid target size range");
    }
    SequenceDescriptor d;
    d.task = task;
    d.height = d.width = o.frame_size;
    d.shape = palette_shapes()[rng.below(palette_shapes().size())];
    d.color = palette_colors()[rng.below(palette_colors().size())];
    d.target_w = o.min_target + rng.below(o.max_target - o.min_target + 1);
    d.target_h = o.min_target + rng.below(o.max_target - o.min_target + 1);
    d.start_x = rng.uniform(0.0, static_cast<double>(o.frame_size - d.target_w));
    d.start_y = rng.uniform(0.0, static_cast<double>(o.frame_size - d.target_h));
    d.vx = rng.uniform(-o.max_speed, o.max_speed);
    d.vy = rng.uniform(-o.max_speed, o.max_speed);
    d.distractors = rng.below(o.max_distractors + 1);
    d.camouflage = o.camouflage;
    return d;
}

SamplePool::SamplePool(const std::vector<SyntheticSequence>& sequences) : sequences_(sequences) {
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        if (sequences[i].length() < 1) throw std::invalid_argument("sample pool: empty sequence");
        by_task_[task_index(sequences[i].task)].push_back(i);
    }
}

Task SamplePool::draw_task(const SampleMix& mix, Rng& rng) const {
    double total = 0.0;
    for (std::size_t k = 0; k < kNumTasks; ++k) {
        if (mix.weights[k] < 0.0) throw std::invalid_argument("sample mix weights must be non-negative");
        if (mix.weights[k] > 0.0 && by_task_[k].empty()) {
            throw std::invalid_argument("sample pool has no sequence for weighted task " +
                                        std::string(task_name(kAllTasks[k])));
        }
        total += mix.weights[k];
    }
    if (!(total > 0.0)) throw std::invalid_argument("sample mix has no positive weight");
    const double r = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < kNumTasks; ++k) {
        if (mix.weights[k] <= 0.0) continue;
        acc += mix.weights[k];
        if (r < acc) return kAllTasks[k];
    }
    for (std::size_t k = kNumTasks; k-- > 0;) {
        if (mix.weights[k] > 0.0) return kAllTasks[k];
    }
    return Task::RGB;
}

std::vector<SamplePick> SamplePool::sample_batch(const SampleMix& mix, std::size_t batch, std::size_t max_gap,
                                                 Rng& rng) const {
    std::vector<SamplePick> picks;
    picks.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        SamplePick p;
        p.task = draw_task(mix, rng);
        const auto& candidates = by_task_[task_index(p.task)];
        p.sequence = candidates[rng.below(candidates.size())];
        const std::size_t len = sequences_[p.sequence].length();
        const std::size_t gap = std::min(max_gap, len - 1);
        const std::size_t first = rng.below(len);
        const std::size_t lo = first >= gap ? first - gap : 0;
        const std::size_t hi = std::min(len - 1, first + gap);
        const std::size_t second = lo + rng.below(hi - lo + 1);
        p.template_frame = std::min(first, second);
        p.search_frame = std::max(first, second);
        p.dynamic_frame = p.template_frame + rng.below(p.search_frame - p.template_frame + 1);
        picks.push_back(p);
    }
    return picks;
}

TrackingMetrics compute_metrics(std::span<const Box> predicted, std::span<const Box> ground_truth) {
    if (predicted.size() != ground_truth.size()) {
        throw std::invalid_argument("compute_metrics: " + std::to_string(predicted.size()) + " predictions for " +
                                    std::to_string(ground_truth.size()) + " ground-truth boxes");
    }
    if (predicted.empty()) throw std::invalid_argument("compute_metrics: no frames");
    const std::size_t n = predicted.size();
    std::vector<double> ious(n);
    std::size_t precise = 0;
    double iou_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ious[i] = iou(predicted[i], ground_truth[i]);
        iou_sum += ious[i];
        const double err = std::hypot(predicted[i].cx() - ground_truth[i].cx(), predicted[i].cy() - ground_truth[i].cy());
        if (err <= 20.0) ++precise;
    }
    constexpr int kThresholds = 21;
    double auc = 0.0;
    for (int k = 0; k < kThresholds; ++k) {
        const double t = static_cast<double>(k) / 20.0;
        std::size_t ok = 0;
        for (double v : ious) ok += v > t;
        auc += static_cast<double>(ok) / static_cast<double>(n);
    }
    return {auc / kThresholds, static_cast<double>(precise) / static_cast<double>(n), iou_sum / static_cast<double>(n)};
}

}  // namespace sutrack
