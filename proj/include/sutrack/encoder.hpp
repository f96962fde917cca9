#pragma once

#include <vector>

#include "sutrack/parameters.hpp"
#include "sutrack/random.hpp"
#include "sutrack/tensor.hpp"

namespace sutrack {

struct EncoderConfig {
    std::size_t depth = 2;
    std::size_t dim = 64;
    std::size_t heads = 4;
    double mlp_ratio = 4.0;
    double ln_eps = 1e-5;
};

struct LayerNormParams {
    Tensor gamma, beta;
    Tensor operator()(const Tensor& x, double eps) const;
};

struct EncoderBlock {
    LayerNormParams norm1, norm2;
    Tensor qkv_weight, qkv_bias;    // 3D × D, 3D
    Tensor proj_weight, proj_bias;  // D × D, D
    Tensor fc1_weight, fc1_bias;    // H × D, H
    Tensor fc2_weight, fc2_bias;    // D × H, D
};

/// Multi-head self-attention over the rows of x (N × D); all tokens attend to all.
Tensor self_attention(const Tensor& x, const EncoderBlock& block, std::size_t heads);
/// x + MHSA(LN(x)), then + MLP(LN(·)).
Tensor encoder_block(const Tensor& x, const EncoderBlock& block, std::size_t heads, double eps);

/// Pre-norm ViT encoder: depth blocks followed by a final layer norm.
class Encoder {
public:
    Encoder(const EncoderConfig& config, ParameterSet& params, Rng& rng);

    /// N × D → N × D. Throws if the width does not match the configuration.
    Tensor encode(const Tensor& tokens) const;

    const EncoderConfig& config() const { return config_; }
    const std::vector<EncoderBlock>& blocks() const { return blocks_; }
    const LayerNormParams& final_norm() const { return final_norm_; }

private:
    EncoderConfig config_;
    std::vector<EncoderBlock> blocks_;
    LayerNormParams final_norm_;
};

}  // namespace sutrack
