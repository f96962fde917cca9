#include "sutrack/heads.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sutrack/ops.hpp"

namespace sutrack {

Tensor HeadBranch::operator()(const Tensor& tokens) const {
    return sigmoid(linear(gelu(linear(tokens, w1, b1)), w2, b2));
}

namespace {

HeadBranch make_branch(const std::string& name, std::size_t dim, std::size_t hidden, std::size_t out,
                       double out_bias, ParameterSet& params, Rng& rng) {
    const double b_in = 1.0 / std::sqrt(static_cast<double>(dim));
    const double b_hid = 1.0 / std::sqrt(static_cast<double>(hidden));
    HeadBranch b;
    b.w1 = params.add_uniform(name + ".fc1.weight", {hidden, dim}, b_in, rng, ParamGroup::other);
    b.b1 = params.add_constant(name + ".fc1.bias", {hidden}, 0.0, ParamGroup::other);
    b.w2 = params.add_uniform(name + ".fc2.weight", {out, hidden}, b_hid, rng, ParamGroup::other);
    b.b2 = params.add_constant(name + ".fc2.bias", {out}, out_bias, ParamGroup::other);
    return b;
}

}  // namespace

TrackHead::TrackHead(const TrackHeadConfig& config, ParameterSet& params, Rng& rng) {
    // Score prior of roughly one positive cell in sixteen.
    const double score_prior = -std::log(15.0);
    score_ = make_branch("head.score", config.dim, config.hidden, 1, score_prior, params, rng);
    offset_ = make_branch("head.offset", config.dim, config.hidden, 2, 0.0, params, rng);
    size_ = make_branch("head.size", config.dim, config.hidden, 2, 0.0, params, rng);
}

TrackHead::TrackHead(HeadBranch score, HeadBranch offset, HeadBranch size)
    : score_(std::move(score)), offset_(std::move(offset)), size_(std::move(size)) {}

HeadOutput TrackHead::operator()(const Tensor& search_tokens) const {
    if (search_tokens.rank() != 2) {
        throw std::invalid_argument("track head expects S²×D tokens, got " + shape_str(search_tokens.shape()));
    }
    const std::size_t n = search_tokens.dim(0);
    const auto s = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
    if (s * s != n) throw std::invalid_argument("search span of " + std::to_string(n) + " tokens is not square");
    HeadOutput out;
    out.score = reshape(score_(search_tokens), {s, s});
    out.offset = reshape(offset_(search_tokens), {s, s, 2});
    out.size = reshape(size_(search_tokens), {s, s, 2});
    return out;
}

PoolingMode parse_pooling_mode(std::string_view s) {
    if (s == "mean_pool") return PoolingMode::mean_pool;
    if (s == "text_token") return PoolingMode::text_token;
    if (s == "extra_task_token") return PoolingMode::extra_task_token;
    throw std::invalid_argument("unknown pooling_mode '" + std::string(s) +
                                "' (expected one of mean_pool, text_token, extra_task_token)");
}

std::string_view to_string(PoolingMode m) {
    switch (m) {
        case PoolingMode::mean_pool: return "mean_pool";
        case PoolingMode::text_token: return "text_token";
        case PoolingMode::extra_task_token: return "extra_task_token";
    }
    return "?";
}

TaskHead::TaskHead(const TaskHeadConfig& config, ParameterSet& params, Rng& rng) : config_(config) {
    const std::size_t d = config.dim, h = config.hidden;
    const double bd = 1.0 / std::sqrt(static_cast<double>(d));
    const double bh = 1.0 / std::sqrt(static_cast<double>(h));
    constexpr auto g = ParamGroup::other;
    w1 = params.add_uniform("task_head.fc1.weight", {h, d}, bd, rng, g);
    b1 = params.add_constant("task_head.fc1.bias", {h}, 0.0, g);
    w2 = params.add_uniform("task_head.fc2.weight", {h, h}, bh, rng, g);
    b2 = params.add_constant("task_head.fc2.bias", {h}, 0.0, g);
    w3 = params.add_uniform("task_head.fc3.weight", {kNumTasks, h}, bh, rng, g);
    b3 = params.add_constant("task_head.fc3.bias", {kNumTasks}, 0.0, g);
    if (config.pooling == PoolingMode::extra_task_token) {
        task_token_ = params.add_uniform("task_head.task_token", {1, d}, 0.02, rng, g);
    }
}

Tensor TaskHead::mlp(const Tensor& pooled) const {
    Tensor x = pooled.rank() == 1 ? reshape(pooled, {1, pooled.dim(0)}) : pooled;
    Tensor y = linear(gelu(linear(gelu(linear(x, w1, b1)), w2, b2)), w3, b3);
    return reshape(y, {kNumTasks});
}

Tensor TaskHead::operator()(const Tensor& tokens) const {
    if (tokens.rank() != 2 || tokens.dim(1) != config_.dim) {
        throw std::invalid_argument("task head expects N×" + std::to_string(config_.dim) + " tokens, got " +
                                    shape_str(tokens.shape()));
    }
    return mlp(mean(tokens, {0}, true));
}

}  // namespace sutrack
