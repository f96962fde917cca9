#include "sutrack/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sutrack/ops.hpp"

namespace sutrack {

LossReport combine_losses(double cls, double iou_term, double l1, double task, const LossWeights& weights) {
    LossReport r{cls, iou_term, l1, task, 0.0};
    r.total = cls + weights.giou * iou_term + weights.l1 * l1 + task;
    return r;
}

std::pair<std::size_t, std::size_t> center_cell(const Box& box, std::size_t grid, std::size_t patch) {
    const double side = static_cast<double>(grid * patch);
    const double cx = box.cx(), cy = box.cy();
    if (!(cx >= 0.0 && cx < side && cy >= 0.0 && cy < side)) {
        throw std::invalid_argument("box center (" + std::to_string(cx) + ", " + std::to_string(cy) +
                                    ") outside the " + std::to_string(grid) + "x" + std::to_string(grid) + " grid");
    }
    const auto p = static_cast<double>(patch);
    return {static_cast<std::size_t>(cy / p), static_cast<std::size_t>(cx / p)};
}

Tensor focal_target(const Box& gt, std::size_t grid, std::size_t patch) {
    const auto [ci, cj] = center_cell(gt, grid, patch);
    const double p = static_cast<double>(patch);
    const double diag = std::hypot(gt.width() / p, gt.height() / p);
    const double sigma = std::max(1.0, diag / 6.0);
    Tensor y({grid, grid});
    auto v = y.mutable_values();
    for (std::size_t i = 0; i < grid; ++i) {
        for (std::size_t j = 0; j < grid; ++j) {
            const double di = static_cast<double>(i) - static_cast<double>(ci);
            const double dj = static_cast<double>(j) - static_cast<double>(cj);
            v[i * grid + j] = (i == ci && j == cj) ? 1.0 : std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
        }
    }
    return y;
}

Tensor weighted_focal(const Tensor& score, const Tensor& target, const FocalParams& params) {
    if (score.shape() != target.shape()) {
        throw std::invalid_argument("weighted_focal: score " + shape_str(score.shape()) + " vs target " +
                                    shape_str(target.shape()));
    }
    const auto p = score.values();
    const auto y = target.values();
    Tensor pos_mask(score.shape()), neg_weight(score.shape());
    auto pm = pos_mask.mutable_values();
    auto nw = neg_weight.mutable_values();
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0 && p[i] < 1.0)) {
            throw std::domain_error("weighted_focal: score " + std::to_string(p[i]) + " outside (0, 1)");
        }
        if (y[i] == 1.0) {
            pm[i] = 1.0;
            ++n_pos;
        } else {
            nw[i] = std::pow(1.0 - y[i], params.beta);
        }
    }
    if (n_pos == 0) throw std::invalid_argument("weighted_focal: target has no positive cell");
    // Only the terms selected by the masks contribute; log() inputs stay inside (0, 1).
    Tensor pos = mul(pos_mask, mul(pow(1.0 - score, params.alpha), log(score)));
    Tensor neg = mul(neg_weight, mul(pow(score, params.alpha), log(1.0 - score)));
    return scale(sum(add(pos, neg)), -1.0 / static_cast<double>(n_pos));
}

double iou(const Box& a, const Box& b) {
    const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double giou(const Box& a, const Box& b) {
    const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    const double hull = (std::max(a.x1, b.x1) - std::min(a.x0, b.x0)) * (std::max(a.y1, b.y1) - std::min(a.y0, b.y0));
    if (!(uni > 0.0) || !(hull > 0.0)) throw std::invalid_argument("giou: both boxes have zero area");
    return inter / uni - (hull - uni) / hull;
}

Tensor giou(const Tensor& pred, const Tensor& gt) {
    if (pred.shape() != Shape{4} || gt.shape() != Shape{4}) {
        throw std::invalid_argument("giou: expected two (4,) boxes, got " + shape_str(pred.shape()) + " and " +
                                    shape_str(gt.shape()));
    }
    const auto g = gt.values();
    if (!(g[2] > g[0] && g[3] > g[1])) throw std::invalid_argument("giou: ground-truth box has zero area");
    const auto pv = pred.values();
    if (pv[2] < pv[0] || pv[3] < pv[1]) throw std::invalid_argument("giou: predicted box has negative extent");

    auto area = [](const Tensor& wh) { return mul(slice(wh, 0, 0, 1), slice(wh, 0, 1, 2)); };
    Tensor p_lo = slice(pred, 0, 0, 2), p_hi = slice(pred, 0, 2, 4);
    Tensor g_lo = slice(gt, 0, 0, 2), g_hi = slice(gt, 0, 2, 4);
    Tensor inter = area(relu(sub(minimum(p_hi, g_hi), maximum(p_lo, g_lo))));
    Tensor uni = sub(add(area(sub(p_hi, p_lo)), area(sub(g_hi, g_lo))), inter);
    Tensor hull = area(sub(maximum(p_hi, g_hi), minimum(p_lo, g_lo)));
    return reshape(sub(div(inter, uni), div(sub(hull, uni), hull)), {});
}

Tensor task_ce(const Tensor& logits, std::size_t true_task) {
    if (logits.rank() != 1 || true_task >= logits.dim(0)) {
        throw std::invalid_argument("task_ce: class " + std::to_string(true_task) + " for logits " +
                                    shape_str(logits.shape()));
    }
    return reshape(neg(slice(log_softmax(logits), 0, true_task, true_task + 1)), {});
}

Tensor decode_cell(const HeadOutput& out, std::size_t row, std::size_t col, std::size_t patch,
                   std::size_t search_res) {
    const std::size_t s = out.grid();
    if (row >= s || col >= s) throw std::out_of_range("decode_cell: cell outside the score grid");
    const std::size_t cell = row * s + col;
    Tensor off = reshape(slice(reshape(out.offset, {s * s, 2}), 0, cell, cell + 1), {2});
    Tensor wh = reshape(slice(reshape(out.size, {s * s, 2}), 0, cell, cell + 1), {2});
    const double r = static_cast<double>(search_res);
    const double p = static_cast<double>(patch);
    Tensor base({2}, {static_cast<double>(col) * p / r, static_cast<double>(row) * p / r});
    Tensor center = add(base, scale(off, p / r));
    Tensor half = scale(wh, 0.5);
    return concat({sub(center, half), add(center, half)}, 0);
}

LossReport LossTerms::report() const {
    return {cls.item(), iou.item(), l1.item(), task.item(), total.item()};
}

namespace {
Tensor weighted_total(const Tensor& cls, const Tensor& iou_term, const Tensor& l1, const Tensor& task,
                      const LossWeights& w) {
    return add(add(add(cls, scale(iou_term, w.giou)), scale(l1, w.l1)), task);
}
}  // namespace

LossTerms total_loss(const HeadOutput& out, const Tensor& task_logits, const Box& gt, std::size_t true_task,
                     const LossContext& ctx) {
    const std::size_t s = out.grid();
    if (s * ctx.patch != ctx.search_res) {
        throw std::invalid_argument("total_loss: grid " + std::to_string(s) + " does not match search resolution " +
                                    std::to_string(ctx.search_res) + " at patch " + std::to_string(ctx.patch));
    }
    if (!(gt.area() > 0.0)) throw std::invalid_argument("total_loss: ground-truth box has zero area");
    LossTerms t;
    t.cls = weighted_focal(out.score, focal_target(gt, s, ctx.patch), ctx.focal);
    const auto [row, col] = center_cell(gt, s, ctx.patch);
    Tensor pred = decode_cell(out, row, col, ctx.patch, ctx.search_res);
    const double r = static_cast<double>(ctx.search_res);
    Tensor gt_norm({4}, {gt.x0 / r, gt.y0 / r, gt.x1 / r, gt.y1 / r});
    t.iou = 1.0 - giou(pred, gt_norm);
    t.l1 = mean(abs(sub(pred, gt_norm)));
    t.task = task_ce(task_logits, true_task);
    t.total = weighted_total(t.cls, t.iou, t.l1, t.task, ctx.weights);
    return t;
}

LossTerms average_losses(std::span<const LossTerms> terms, const LossWeights& weights) {
    if (terms.empty()) throw std::invalid_argument("average_losses: empty batch");
    auto avg = [&](Tensor LossTerms::*field) {
        std::vector<Tensor> parts;
        for (const auto& t : terms) parts.push_back(reshape(t.*field, {1}));
        return mean(concat(parts, 0));
    };
    LossTerms out;
    out.cls = avg(&LossTerms::cls);
    out.iou = avg(&LossTerms::iou);
    out.l1 = avg(&LossTerms::l1);
    out.task = avg(&LossTerms::task);
    out.total = weighted_total(out.cls, out.iou, out.l1, out.task, weights);
    return out;
}

}  // namespace sutrack
