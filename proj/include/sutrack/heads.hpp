#pragma once

#include <string_view>

#include "sutrack/parameters.hpp"
#include "sutrack/random.hpp"
#include "sutrack/tensor.hpp"
#include "sutrack/types.hpp"

namespace sutrack {

/// Center-head maps over the S×S search grid.
struct HeadOutput {
    Tensor score;   // S×S, sigmoid
    Tensor offset;  // S×S×2, (x, y) position of the box center inside its cell
    Tensor size;    // S×S×2, (w, h) normalized by the search-region side
    std::size_t grid() const { return score.dim(0); }
};

/// Two-layer per-token MLP followed by a sigmoid.
struct HeadBranch {
    Tensor w1, b1, w2, b2;
    Tensor operator()(const Tensor& tokens) const;
};

struct TrackHeadConfig {
    std::size_t dim = 64;
    std::size_t hidden = 64;
};

/// Score/offset/size branches applied independently to each search token, so
/// cell (i, j) depends only on token i·S + j.
class TrackHead {
public:
    TrackHead(const TrackHeadConfig& config, ParameterSet& params, Rng& rng);
    TrackHead(HeadBranch score, HeadBranch offset, HeadBranch size);

    /// search_tokens: S²×D. Throws if S² is not a perfect square.
    HeadOutput operator()(const Tensor& search_tokens) const;

    const HeadBranch& score_branch() const { return score_; }
    const HeadBranch& offset_branch() const { return offset_; }
    const HeadBranch& size_branch() const { return size_; }

private:
    HeadBranch score_, offset_, size_;
};

enum class PoolingMode { mean_pool, text_token, extra_task_token };
PoolingMode parse_pooling_mode(std::string_view s);
std::string_view to_string(PoolingMode m);

struct TaskHeadConfig {
    std::size_t dim = 64;
    std::size_t hidden = 32;
    PoolingMode pooling = PoolingMode::mean_pool;
};

/// Three affine layers with GELU in between, producing one logit per task.
class TaskHead {
public:
    TaskHead(const TaskHeadConfig& config, ParameterSet& params, Rng& rng);

    /// Logits (length 5) from a pooled vector of length D (1×D accepted).
    Tensor mlp(const Tensor& pooled) const;
    /// Mean over every row of `tokens` (N×D), then the MLP. Softmax is left to the loss.
    Tensor operator()(const Tensor& tokens) const;

    const TaskHeadConfig& config() const { return config_; }
    /// Learned extra token (1×D); defined only for PoolingMode::extra_task_token.
    const Tensor& task_token() const { return task_token_; }

    Tensor w1, b1, w2, b2, w3, b3;

private:
    TaskHeadConfig config_;
    Tensor task_token_;
};

}  // namespace sutrack
