#include "sutrack/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sutrack/ops.hpp"

namespace sutrack {

Tensor LayerNormParams::operator()(const Tensor& x, double eps) const {
    return add(mul(layer_norm(x, eps), gamma), beta);
}

Tensor self_attention(const Tensor& x, const EncoderBlock& block, std::size_t heads) {
    const std::size_t d = x.dim(1);
    const std::size_t hd = d / heads;
    const double scale_factor = 1.0 / std::sqrt(static_cast<double>(hd));
    Tensor qkv = linear(x, block.qkv_weight, block.qkv_bias);  // N × 3D
    std::vector<Tensor> outputs;
    outputs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor q = slice(qkv, 1, h * hd, (h + 1) * hd);
        Tensor k = slice(qkv, 1, d + h * hd, d + (h + 1) * hd);
        Tensor v = slice(qkv, 1, 2 * d + h * hd, 2 * d + (h + 1) * hd);
        Tensor attn = softmax(scale(matmul(q, transpose(k)), scale_factor));
        outputs.push_back(matmul(attn, v));
    }
    Tensor merged = heads == 1 ? outputs[0] : concat(outputs, 1);
    return linear(merged, block.proj_weight, block.proj_bias);
}

Tensor encoder_block(const Tensor& x, const EncoderBlock& block, std::size_t heads, double eps) {
    Tensor h = add(x, self_attention(block.norm1(x, eps), block, heads));
    Tensor m = linear(gelu(linear(block.norm2(h, eps), block.fc1_weight, block.fc1_bias)), block.fc2_weight,
                      block.fc2_bias);
    return add(h, m);
}

Encoder::Encoder(const EncoderConfig& config, ParameterSet& params, Rng& rng) : config_(config) {
    const std::size_t d = config.dim;
    if (config.heads == 0 || d % config.heads != 0) {
        throw std::invalid_argument("encoder width " + std::to_string(d) + " not divisible by " +
                                    std::to_string(config.heads) + " heads");
    }
    const auto hidden = static_cast<std::size_t>(std::lround(config.mlp_ratio * static_cast<double>(d)));
    if (hidden == 0) throw std::invalid_argument("encoder MLP width must be positive");
    const double bd = 1.0 / std::sqrt(static_cast<double>(d));
    const double bh = 1.0 / std::sqrt(static_cast<double>(hidden));
    constexpr auto g = ParamGroup::encoder;
    for (std::size_t i = 0; i < config.depth; ++i) {
        const std::string p = "encoder.blocks." + std::to_string(i) + ".";
        EncoderBlock b;
        b.norm1 = {params.add_constant(p + "norm1.gamma", {d}, 1.0, g), params.add_constant(p + "norm1.beta", {d}, 0.0, g)};
        b.qkv_weight = params.add_uniform(p + "attn.qkv.weight", {3 * d, d}, bd, rng, g);
        b.qkv_bias = params.add_constant(p + "attn.qkv.bias", {3 * d}, 0.0, g);
        b.proj_weight = params.add_uniform(p + "attn.proj.weight", {d, d}, bd, rng, g);
        b.proj_bias = params.add_constant(p + "attn.proj.bias", {d}, 0.0, g);
        b.norm2 = {params.add_constant(p + "norm2.gamma", {d}, 1.0, g), params.add_constant(p + "norm2.beta", {d}, 0.0, g)};
        b.fc1_weight = params.add_uniform(p + "mlp.fc1.weight", {hidden, d}, bd, rng, g);
        b.fc1_bias = params.add_constant(p + "mlp.fc1.bias", {hidden}, 0.0, g);
        b.fc2_weight = params.add_uniform(p + "mlp.fc2.weight", {d, hidden}, bh, rng, g);
        b.fc2_bias = params.add_constant(p + "mlp.fc2.bias", {d}, 0.0, g);
        blocks_.push_back(std::move(b));
    }
    final_norm_ = {params.add_constant("encoder.norm.gamma", {d}, 1.0, g),
                   params.add_constant("encoder.norm.beta", {d}, 0.0, g)};
}

Tensor Encoder::encode(const Tensor& tokens) const {
    if (tokens.rank() != 2 || tokens.dim(1) != config_.dim) {
        throw std::invalid_argument("encoder expects N×" + std::to_string(config_.dim) + " tokens, got " +
                                    shape_str(tokens.shape()));
    }
    Tensor x = tokens;
    for (const auto& b : blocks_) x = encoder_block(x, b, config_.heads, config_.ln_eps);
    return final_norm_(x, config_.ln_eps);
}

}  // namespace sutrack
