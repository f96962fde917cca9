#pragma once

#include <span>

#include "sutrack/heads.hpp"
#include "sutrack/tensor.hpp"
#include "sutrack/types.hpp"

namespace sutrack {

struct LossWeights {
    double giou = 2.0;
    double l1 = 5.0;
};

struct FocalParams {
    double alpha = 2.0;
    double beta = 4.0;
};

/// The four objective terms and their weighted sum.
struct LossReport {
    double cls = 0, iou = 0, l1 = 0, task = 0, total = 0;
};

/// total = cls + λ_G·iou + λ_L1·l1 + task, evaluated left to right.
LossReport combine_losses(double cls, double iou, double l1, double task, const LossWeights& weights);

/// Cell containing the box center, as (row, col). Throws if the center lies
/// outside the S×S grid of P-pixel cells.
std::pair<std::size_t, std::size_t> center_cell(const Box& box, std::size_t grid, std::size_t patch);

/// Gaussian heatmap: 1 at the center cell, exp(-d²/2σ²) elsewhere, d measured
/// between cell centers in cells and σ = max(1, diagonal_in_cells / 6).
Tensor focal_target(const Box& gt, std::size_t grid, std::size_t patch);

/// Penalty-reduced focal loss, normalized by the number of cells with y == 1.
Tensor weighted_focal(const Tensor& score, const Tensor& target, const FocalParams& params = {});

double iou(const Box& a, const Box& b);
double giou(const Box& a, const Box& b);
/// Differentiable GIoU between two (x0, y0, x1, y1) vectors; `gt` must have positive area.
Tensor giou(const Tensor& pred, const Tensor& gt);

/// Softmax cross-entropy of the true class.
Tensor task_ce(const Tensor& logits, std::size_t true_task);

/// Box predicted at cell (row, col), normalized by the search side:
/// center ((col + off_x)·P, (row + off_y)·P) / R, size = size map value.
Tensor decode_cell(const HeadOutput& out, std::size_t row, std::size_t col, std::size_t patch,
                   std::size_t search_res);

struct LossTerms {
    Tensor cls, iou, l1, task, total;
    LossReport report() const;
};

struct LossContext {
    std::size_t patch = 16;
    std::size_t search_res = 64;
    LossWeights weights;
    FocalParams focal;
};

/// Full objective for one sample. `gt` is in search-crop pixels. Box
/// regression is read at the ground-truth center cell.
LossTerms total_loss(const HeadOutput& out, const Tensor& task_logits, const Box& gt, std::size_t true_task,
                     const LossContext& ctx);

/// Averages each term over a batch; total is recombined with the same weights.
LossTerms average_losses(std::span<const LossTerms> terms, const LossWeights& weights);

}  // namespace sutrack
