#include "sutrack/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sutrack/ops.hpp"
#include "sutrack/tracker.hpp"

namespace sutrack {

TrainingExample make_example(const SamplePool& pool, const SamplePick& pick, const ModelConfig& model,
                             const TrainConfig& train, Rng& rng) {
    const auto& seq = pool.sequences().at(pick.sequence);
    TrainingExample ex;
    ex.task = pick.task;
    for (std::size_t idx : {pick.template_frame, pick.dynamic_frame}) {
        Crop t = crop(seq.frames.at(idx), seq.boxes.at(idx), train.template_factor, model.template_res);
        ex.templates.push_back({t.frame, t.box});
    }
    const Box gt = seq.boxes.at(pick.search_frame);
    const double side = std::sqrt(gt.area());
    const double cx = gt.cx() + rng.uniform(-train.search_jitter, train.search_jitter) * side;
    const double cy = gt.cy() + rng.uniform(-train.search_jitter, train.search_jitter) * side;
    const double s = std::exp(rng.uniform(-train.scale_jitter, train.scale_jitter));
    const Box center_box = Box::from_center(cx, cy, gt.width() * s, gt.height() * s);
    Crop search = crop(seq.frames.at(pick.search_frame), center_box, train.search_factor, model.search_res);
    ex.search = search.frame;
    ex.search_box = search.transform.to_crop(gt);
    return ex;
}

LossTerms batch_loss(const SUTrackModel& model, std::span<const TrainingExample> batch, const TrainConfig& train) {
    const auto& mc = model.config();
    const LossContext ctx{mc.patch, mc.search_res, train.weights, train.focal};
    std::vector<LossTerms> terms;
    terms.reserve(batch.size());
    for (const auto& ex : batch) {
        ModelOutput out = model.forward(ex.templates, ex.search);
        terms.push_back(total_loss(out.head, out.task_logits, ex.search_box, task_index(ex.task), ctx));
    }
    return average_losses(terms, train.weights);
}

Trainer::Trainer(SUTrackModel& model, TrainConfig config)
    : model_(model), config_(config), optimizer_(model.parameters(), config.optim), rng_(config.seed) {}

LossReport Trainer::step(const SamplePool& pool) {
    auto picks = pool.sample_batch(config_.mix, config_.batch, config_.max_frame_gap, rng_);
    std::vector<TrainingExample> batch;
    batch.reserve(picks.size());
    for (const auto& p : picks) batch.push_back(make_example(pool, p, model_.config(), config_, rng_));
    model_.parameters().zero_grad();
    LossTerms loss = batch_loss(model_, batch, config_);
    check_finite(loss.total, "training loss");
    backward(loss.total);
    optimizer_.step(model_.parameters());
    return loss.report();
}

void Trainer::run(const SamplePool& pool, const std::function<void(std::size_t, const LossReport&)>& on_step) {
    for (std::size_t s = 0; s < config_.steps; ++s) {
        LossReport r = step(pool);
        if (on_step) on_step(s, r);
    }
}

double task_accuracy(const SUTrackModel& model, std::span<const TrainingExample> examples) {
    if (examples.empty()) throw std::invalid_argument("task_accuracy: no examples");
    NoGradGuard guard;
    std::size_t correct = 0;
    for (const auto& ex : examples) {
        const Tensor out = model.forward(ex.templates, ex.search).task_logits;
        const auto logits = out.values();
        const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        correct += best == task_index(ex.task);
    }
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrackerConfig tracker_config_for(const ModelConfig& model, double window_weight) {
    TrackerConfig c;
    c.patch = model.patch;
    c.template_res = model.template_res;
    c.search_res = model.search_res;
    c.window_weight = window_weight;
    return c;
}

SequenceResult track_sequence(const ResponseModel& model, const SyntheticSequence& sequence,
                              const TrackerConfig& config) {
    if (sequence.frames.empty() || sequence.boxes.empty()) throw std::invalid_argument("track_sequence: empty sequence");
    Tracker tracker(model, config);
    tracker.init(sequence.frames[0], sequence.boxes[0]);
    SequenceResult r;
    r.boxes.push_back(sequence.boxes[0]);
    r.confidences.push_back(1.0);
    for (std::size_t t = 1; t < sequence.frames.size(); ++t) {
        Detection d = tracker.step(sequence.frames[t]);
        r.boxes.push_back(d.box);
        r.confidences.push_back(d.confidence);
    }
    r.template_updates = tracker.state().template_updates;
    return r;
}

}  // namespace sutrack
